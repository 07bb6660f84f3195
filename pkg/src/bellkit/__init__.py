"""bellkit: two-crystal entangled-pair source model with Clauser-Horne
inequality evaluation, angle optimisation, detection-loophole mapping and
seeded counting-experiment simulation."""

from .inequality import AngleSettings, ChBreakdown, ch_from_counts, ch_sum, visibility
from .loophole_map import (
    BackgroundComparison,
    GridSpec,
    ThresholdCurve,
    background_equivalence_check,
    ch_over_n,
    efficiency_threshold,
    grid_map,
    threshold_curve,
)
from .montecarlo import (
    CountRecord,
    ReplicaSummary,
    RunConfig,
    replicate_study,
    simulate_run,
)
from .optimizer import OptimResult, optimize_angles, phase_sweep
from .quantum_model import (
    DetectorChannel,
    EntangledState,
    MeasurementArm,
    PolarizerChannel,
    coincidence_no_polarizer,
    coincidence_probability,
    ideal_arm,
    pair_amplitudes,
    singles_probability,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSettings",
    "BackgroundComparison",
    "ChBreakdown",
    "CountRecord",
    "DetectorChannel",
    "EntangledState",
    "GridSpec",
    "MeasurementArm",
    "OptimResult",
    "PolarizerChannel",
    "ReplicaSummary",
    "RunConfig",
    "ThresholdCurve",
    "background_equivalence_check",
    "ch_from_counts",
    "ch_over_n",
    "ch_sum",
    "coincidence_no_polarizer",
    "coincidence_probability",
    "efficiency_threshold",
    "grid_map",
    "ideal_arm",
    "optimize_angles",
    "pair_amplitudes",
    "phase_sweep",
    "replicate_study",
    "simulate_run",
    "singles_probability",
    "threshold_curve",
    "visibility",
]
