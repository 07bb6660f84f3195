"""Analytic detection probabilities for a two-crystal polarisation-entangled pair source.

The two-photon state is |HH> + f |VV| (unnormalised), with f a complex
entanglement parameter.  Each measurement arm consists of a real polariser
(transmissions eps_par along the axis, eps_perp across it) followed by a
detector of quantum efficiency eta.  All probabilities returned here are per
produced pair, conditioned on the pair existing.

Angle convention: |theta> = sin(theta)|H> + cos(theta)|V>, so the |HH>
component of the state projects with amplitude sin(theta1)*sin(theta2).
Angles are radians throughout; degrees only exist at the CLI boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "EntangledState",
    "PolarizerChannel",
    "DetectorChannel",
    "MeasurementArm",
    "ideal_arm",
    "pair_amplitudes",
    "coincidence_probability",
    "coincidence_no_polarizer",
    "singles_probability",
]


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class EntangledState:
    """Two-photon superposition |HH> + f|VV>, f = f_mag * exp(i * f_phase).

    ``coherence`` in [0, 1] scales the interference cross-terms only; it
    models partial indistinguishability of the two crystals' emission
    (1 = fully coherent superposition, 0 = incoherent mixture).
    """

    f_mag: float
    f_phase: float = 0.0
    coherence: float = 1.0

    def __post_init__(self):
        _require_finite("EntangledState fields", self.f_mag, self.f_phase, self.coherence)
        if self.f_mag < 0:
            raise ValueError(f"f_mag must be >= 0, got {self.f_mag}")
        if not 0.0 <= self.coherence <= 1.0:
            raise ValueError(f"coherence must be in [0, 1], got {self.coherence}")

    @property
    def f(self) -> complex:
        return self.f_mag * cmath.exp(1j * self.f_phase)

    @property
    def norm(self) -> float:
        """Normalisation constant 1 / (1 + |f|^2)."""
        return 1.0 / (1.0 + self.f_mag**2)


@dataclass(frozen=True)
class PolarizerChannel:
    """Real polariser: intensity transmissions along (eps_par) and across
    (eps_perp) its axis.  0 <= eps_perp <= eps_par <= 1."""

    eps_par: float = 1.0
    eps_perp: float = 0.0

    def __post_init__(self):
        _require_finite("PolarizerChannel fields", self.eps_par, self.eps_perp)
        if not 0.0 <= self.eps_perp <= self.eps_par <= 1.0:
            raise ValueError(
                f"require 0 <= eps_perp <= eps_par <= 1, got "
                f"eps_perp={self.eps_perp}, eps_par={self.eps_par}"
            )

    def extinction_ratio(self) -> float:
        return self.eps_par * self.eps_perp


@dataclass(frozen=True)
class DetectorChannel:
    """Total quantum efficiency (optics + detector) and background singles rate."""

    efficiency: float = 1.0
    background_rate: float = 0.0

    def __post_init__(self):
        _require_finite("DetectorChannel fields", self.efficiency, self.background_rate)
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")
        if self.background_rate < 0:
            raise ValueError(f"background_rate must be >= 0, got {self.background_rate}")


@dataclass(frozen=True)
class MeasurementArm:
    polarizer: PolarizerChannel = PolarizerChannel()
    detector: DetectorChannel = DetectorChannel()


def ideal_arm() -> MeasurementArm:
    """Perfect polariser, unit-efficiency detector, no background."""
    return MeasurementArm(PolarizerChannel(1.0, 0.0), DetectorChannel(1.0, 0.0))


def pair_amplitudes(state: EntangledState, theta1: float, theta2: float):
    """Projection amplitudes of the pair state onto the four analyser outcomes.

    Parameters
    ----------
    state : EntangledState
    theta1, theta2 : float
        Analyser angles (radians) on arms 1 and 2.

    Returns
    -------
    (A_pp, A_px, A_xp, A_xx) : tuple of complex
        Unnormalised amplitudes for (par,par), (par,perp), (perp,par),
        (perp,perp); callers apply the 1/(1+|f|^2) normalisation on
        probabilities.
    """
    _require_finite("angles", theta1, theta2)
    f = state.f
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s2, c2 = math.sin(theta2), math.cos(theta2)
    a_pp = s1 * s2 + f * c1 * c2
    a_px = s1 * c2 - f * c1 * s2
    a_xp = c1 * s2 - f * s1 * c2
    a_xx = c1 * c2 + f * s1 * s2
    return a_pp, a_px, a_xp, a_xx


def _weights(state: EntangledState, theta1: float, theta2: float):
    """Squared projection moduli with the interference terms scaled by coherence."""
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s2, c2 = math.sin(theta2), math.cos(theta2)
    f2 = state.f_mag**2
    cross = 2.0 * state.f_mag * math.cos(state.f_phase) * state.coherence
    x = s1 * c1 * s2 * c2
    w_pp = s1 * s1 * s2 * s2 + f2 * c1 * c1 * c2 * c2 + cross * x
    w_px = s1 * s1 * c2 * c2 + f2 * c1 * c1 * s2 * s2 - cross * x
    w_xp = c1 * c1 * s2 * s2 + f2 * s1 * s1 * c2 * c2 - cross * x
    w_xx = c1 * c1 * c2 * c2 + f2 * s1 * s1 * s2 * s2 + cross * x
    return w_pp, w_px, w_xp, w_xx


def coincidence_probability(state: EntangledState, arm1: MeasurementArm,
                            arm2: MeasurementArm, theta1: float, theta2: float) -> float:
    """Coincidence probability per produced pair with both polarisers in place.

    Expectation value of T1 x T2 on the (partially coherent) pair state,
    times both detector efficiencies, where Ti = eps_par |theta_i><theta_i|
    + eps_perp |theta_i_perp><theta_i_perp|.
    """
    _require_finite("angles", theta1, theta2)
    w_pp, w_px, w_xp, w_xx = _weights(state, theta1, theta2)
    p1, x1 = arm1.polarizer.eps_par, arm1.polarizer.eps_perp
    p2, x2 = arm2.polarizer.eps_par, arm2.polarizer.eps_perp
    t = p1 * p2 * w_pp + p1 * x2 * w_px + x1 * p2 * w_xp + x1 * x2 * w_xx
    return arm1.detector.efficiency * arm2.detector.efficiency * t * state.norm


def _polarizer_marginal(state: EntangledState, pol: PolarizerChannel, theta: float) -> float:
    """Transmission probability of one pair photon through a single polariser,
    tracing out the partner.  Independent of f_phase and coherence."""
    s, c = math.sin(theta), math.cos(theta)
    f2 = state.f_mag**2
    m = pol.eps_par * (s * s + f2 * c * c) + pol.eps_perp * (c * c + f2 * s * s)
    return m * state.norm


def coincidence_no_polarizer(state: EntangledState, arm1: MeasurementArm,
                             arm2: MeasurementArm, theta: float,
                             which_arm_removed: int) -> float:
    """Coincidence probability with one arm's polariser removed.

    ``theta`` is the analyser angle on the arm that keeps its polariser.
    The bare arm transmits everything, so only its detector efficiency
    enters.
    """
    _require_finite("angle", theta)
    if which_arm_removed == 2:
        marg = _polarizer_marginal(state, arm1.polarizer, theta)
    elif which_arm_removed == 1:
        marg = _polarizer_marginal(state, arm2.polarizer, theta)
    else:
        raise ValueError(f"which_arm_removed must be 1 or 2, got {which_arm_removed!r}")
    return arm1.detector.efficiency * arm2.detector.efficiency * marg


def singles_probability(state: EntangledState, arm: MeasurementArm,
                        theta: float, which_arm: int) -> float:
    """Single-detection probability per produced pair on one arm alone.

    Scales with that arm's efficiency only; this is the quantity whose
    ratio to coincidences sets the detection-efficiency threshold.
    """
    _require_finite("angle", theta)
    if which_arm not in (1, 2):
        raise ValueError(f"which_arm must be 1 or 2, got {which_arm!r}")
    return arm.detector.efficiency * _polarizer_marginal(state, arm.polarizer, theta)
