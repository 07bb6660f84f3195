import numpy as np
import pytest
from hypothesis import settings

from bellkit import EntangledState, ideal_arm, optimize_angles

settings.register_profile("repeatable", derandomize=True)
settings.load_profile("repeatable")


@pytest.fixture(scope="session")
def warm_kernels():
    """Touch the jitted kernels once so compile time stays out of timings."""
    arm = ideal_arm()
    optimize_angles(EntangledState(0.5), arm, arm, "heralded")
    optimize_angles(EntangledState(0.5), arm, arm, "strict")
    return True


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
