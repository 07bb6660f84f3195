"""Detection-loophole mapping over the (efficiency, entanglement) plane.

Everything here runs the CH sum in strict mode (true singles in the
subtracted terms), the form whose efficiency dependence decides whether a
loophole-free test is possible.  Both arms share one efficiency and one
polariser model, matching the single-eta axis of the map.

``ch_over_n`` normalises the maximal CH by N = eta1 + eta2, the total
polariser-removed detection probability of the two arms.  N is
settings-independent and strictly positive, and the zero contour - the
loophole boundary - is invariant under any positive normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from ._contour import extract_contours
from .optimizer import optimize_angles, pack_params
from .quantum_model import (
    DetectorChannel,
    EntangledState,
    MeasurementArm,
    PolarizerChannel,
)

__all__ = [
    "CONTOUR_LEVELS",
    "GridSpec",
    "GridMapResult",
    "ThresholdCurve",
    "BackgroundComparison",
    "ch_over_n",
    "grid_map",
    "efficiency_threshold",
    "threshold_curve",
    "background_equivalence_check",
    "grid_csv",
    "contours_csv",
]

CONTOUR_LEVELS = (0.0, 0.01, 0.1, 0.15, 0.2)
THRESHOLD_TOL = 1e-4


@dataclass(frozen=True)
class GridSpec:
    """Sampling of the (eta, f) plane; mode is fixed to strict."""

    eta_min: float = 0.5
    eta_max: float = 1.0
    eta_steps: int = 100
    f_min: float = 0.01
    f_max: float = 1.0
    f_steps: int = 100
    polarizer: PolarizerChannel = field(default_factory=PolarizerChannel)

    def __post_init__(self):
        if not 0.0 <= self.eta_min < self.eta_max <= 1.0:
            raise ValueError(
                f"require 0 <= eta_min < eta_max <= 1, got [{self.eta_min}, {self.eta_max}]")
        if not 0.0 <= self.f_min < self.f_max:
            raise ValueError(
                f"require 0 <= f_min < f_max, got [{self.f_min}, {self.f_max}]")
        if self.eta_steps < 2 or self.f_steps < 2:
            raise ValueError(
                f"steps must be >= 2, got eta_steps={self.eta_steps}, f_steps={self.f_steps}")

    def eta_values(self):
        return np.linspace(self.eta_min, self.eta_max, self.eta_steps)

    def f_values(self):
        return np.linspace(self.f_min, self.f_max, self.f_steps)


@dataclass(frozen=True)
class GridMapResult:
    f_values: np.ndarray
    eta_values: np.ndarray
    matrix: np.ndarray                       # shape (f_steps, eta_steps)
    contours: dict                           # level -> list of [(f, eta), ...]


@dataclass(frozen=True)
class ThresholdCurve:
    points: Tuple[Tuple[float, float], ...]  # (f, eta_crit), sorted by f
    tolerance: float

    def __post_init__(self):
        fs = [p[0] for p in self.points]
        if fs != sorted(fs):
            raise ValueError("threshold points must be sorted by f")
        for _, eta in self.points:
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"eta_crit must be in (0, 1], got {eta}")


def _shared_arms(eta: float, polarizer: PolarizerChannel):
    arm = MeasurementArm(polarizer, DetectorChannel(eta, 0.0))
    return arm, arm


def _max_kernel(P, objective="ch"):
    """Maximal CH (or ratio) over angles: coarse grid plus simplex starts."""
    thetas = np.deg2rad(np.arange(0.0, 180.0, 2.0))
    vals, quads = _kernels.topk_cells(thetas, P, 5, objective=objective)
    nm = _kernels.nelder_mead if objective == "ch" else _kernels.nelder_mead_ratio
    best_val, best_x = -math.inf, None
    for q in quads:
        xb, fb, _, _ = nm(q.copy(), P, math.radians(2.0), 1e-7, 10_000)
        if fb > best_val:
            best_val, best_x = fb, xb
    return best_val, best_x


def ch_over_n(f: float, eta: float, polarizer: Optional[PolarizerChannel] = None,
              f_phase: float = 0.0) -> float:
    """Maximal strict-mode CH divided by the total detection probability.

    The state is fully coherent with the given f; both arms share ``eta``
    and ``polarizer``.
    """
    polarizer = polarizer or PolarizerChannel()
    state = EntangledState(f, f_phase, 1.0)
    arm1, arm2 = _shared_arms(eta, polarizer)
    res = optimize_angles(state, arm1, arm2, "strict", standardize=False)
    return res.ch / (2.0 * eta)


def grid_map(spec: GridSpec, levels=CONTOUR_LEVELS) -> GridMapResult:
    """Dense CH/N matrix over the grid plus iso-level contour polylines.

    Rows follow f, columns eta; each node is an independent full angle
    optimisation.  Contours are extracted by edge-interpolated marching
    squares on the completed matrix.
    """
    fs = spec.f_values()
    etas = spec.eta_values()
    matrix = np.empty((len(fs), len(etas)))
    for i, f in enumerate(fs):
        for j, eta in enumerate(etas):
            matrix[i, j] = ch_over_n(float(f), float(eta), spec.polarizer)
    contours = {
        float(level): extract_contours(fs, etas, matrix, float(level))
        for level in levels
    }
    return GridMapResult(fs, etas, matrix, contours)


def efficiency_threshold(f: float, polarizer: Optional[PolarizerChannel] = None,
                         f_phase: float = 0.0,
                         tolerance: float = THRESHOLD_TOL) -> Optional[float]:
    """Smallest shared efficiency with a strict-mode violation, by bisection.

    Returns None ("no threshold") when even eta = 1 shows no violation,
    e.g. for an entanglement phase of pi/2.  Each bisection probe re-runs
    the full angle optimisation, since the optimal settings move with eta.
    """
    if f <= 0:
        raise ValueError(f"f must be > 0, got {f}")
    polarizer = polarizer or PolarizerChannel()

    def max_ch(eta):
        P = _params_for(f, eta, polarizer, f_phase)
        return _max_kernel(P, "ch")[0]

    hi = 1.0
    if max_ch(hi) <= 1e-10:
        return None
    lo = 0.01
    if max_ch(lo) > 0:
        return lo
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if max_ch(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def _params_for(f, eta, polarizer, f_phase=0.0, den_scale=1.0):
    state = EntangledState(f, f_phase, 1.0)
    arm1, arm2 = _shared_arms(eta, polarizer)
    return pack_params(state, arm1, arm2, "strict", den_scale=den_scale)


def threshold_curve(f_values, polarizer: Optional[PolarizerChannel] = None,
                    tolerance: float = THRESHOLD_TOL) -> ThresholdCurve:
    """Efficiency threshold versus f; f values with no threshold are skipped."""
    pts = []
    for f in sorted(float(v) for v in f_values):
        eta = efficiency_threshold(f, polarizer, tolerance=tolerance)
        if eta is not None:
            pts.append((f, eta))
    return ThresholdCurve(tuple(pts), tolerance)


@dataclass(frozen=True)
class BackgroundComparison:
    background_fraction: float
    equivalent_eta: float
    max_ratio_background: float      # denominator terms inflated by (1 + b)
    max_ratio_reduced_eta: float     # background replaced by eta / (1 + b)
    difference: float
    max_ch_background: float


def background_equivalence_check(f: float, eta: float, background_fraction: float,
                                 polarizer: Optional[PolarizerChannel] = None
                                 ) -> BackgroundComparison:
    """Background vs equivalent-efficiency comparison.

    Uncorrelated background inflates the singles (denominator) terms by
    (1 + b); dividing the efficiency by the same factor produces the same
    maximal ratio, because the strict-mode ratio scales as eta / (1 + b).
    """
    b = background_fraction
    if not 0.0 <= b < 1.0:
        raise ValueError(f"background fraction must be in [0, 1), got {b}")
    if f <= 0:
        raise ValueError(f"f must be > 0, got {f}")
    polarizer = polarizer or PolarizerChannel()

    r_bg, _ = _max_kernel(_params_for(f, eta, polarizer, den_scale=1.0 + b), "ratio")
    eta_eq = eta / (1.0 + b)
    r_eq, _ = _max_kernel(_params_for(f, eta_eq, polarizer), "ratio")
    ch_bg, _ = _max_kernel(_params_for(f, eta, polarizer, den_scale=1.0 + b), "ch")
    return BackgroundComparison(
        background_fraction=b,
        equivalent_eta=eta_eq,
        max_ratio_background=r_bg,
        max_ratio_reduced_eta=r_eq,
        difference=r_bg - r_eq,
        max_ch_background=ch_bg,
    )


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def grid_csv(result: GridMapResult) -> str:
    """Row-major (f outer, eta inner) CSV of the CH/N matrix."""
    lines = ["f,eta,ch_over_n"]
    for i, f in enumerate(result.f_values):
        for j, eta in enumerate(result.eta_values):
            lines.append(f"{_fmt(f)},{_fmt(eta)},{_fmt(result.matrix[i, j])}")
    return "\n".join(lines) + "\n"


def contours_csv(result: GridMapResult) -> str:
    lines = ["level,poly_id,f,eta"]
    for level in sorted(result.contours):
        for pid, poly in enumerate(result.contours[level]):
            for f, eta in poly:
                lines.append(f"{_fmt(level)},{pid},{_fmt(f)},{_fmt(eta)}")
    return "\n".join(lines) + "\n"
