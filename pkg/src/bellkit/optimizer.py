"""Global search for the analyser settings maximising the CH sum.

Strategy: exact maximisation over a coarse 2-degree grid (the 4-angle grid
decomposes into pairwise tables, so the full grid is scanned without
materialising it), then derivative-free simplex refinement from the best
five grid cells.

The CH landscape is degenerate: for ideal polarisers in heralded mode the
maximum is attained along a continuous curve of settings (for a maximally
entangled state the curve includes all global rotations).  The refined
point is therefore standardised: a constrained descent slides along the
level set of the maximum until the fourth angle reaches 0 (mod pi), where
the conventional representative with theta2' = 0 lives, and the remaining
angles are re-polished.  When the maximum is isolated (leaky polarisers,
strict mode with eta < 1) the descent cannot move and the found point is
kept.  Finally the smaller of the settings and their pi-reflection (an
exact symmetry) is reported, compared lexicographically in degrees rounded
to 1e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .inequality import MODES, AngleSettings, ch_sum
from .quantum_model import EntangledState, MeasurementArm

__all__ = ["OptimResult", "optimize_angles", "phase_sweep"]

GRID_STEP_DEG = 2.0
N_STARTS = 5
XATOL = 1e-7          # simplex diameter stall criterion, radians
MAXFEV = 10_000       # per refinement start
TIE_REL = 1e-12


@dataclass(frozen=True)
class OptimResult:
    settings: AngleSettings
    ch: float
    ratio: float
    mode: str
    converged: bool
    evaluations: int


def pack_params(state: EntangledState, arm1: MeasurementArm, arm2: MeasurementArm,
                mode: str, den_scale: float = 1.0):
    """Flatten domain objects into the kernel parameter vector."""
    return _kernels.pack_params(
        state.f_mag, state.f_phase, state.coherence,
        arm1.polarizer.eps_par, arm1.polarizer.eps_perp,
        arm2.polarizer.eps_par, arm2.polarizer.eps_perp,
        arm1.detector.efficiency, arm2.detector.efficiency,
        strict=(mode == "strict"), den_scale=den_scale,
    )


def _grid_thetas():
    return np.deg2rad(np.arange(0.0, 180.0, GRID_STEP_DEG))


def _wrap_dist(t):
    """Distance of an angle from the nearest multiple of pi."""
    m = t % math.pi
    return min(m, math.pi - m)


def _nm_generic(fun, x0, step, xatol, maxfev):
    """Plain-Python Nelder-Mead minimiser for the standardisation phases."""
    x0 = np.asarray(x0, dtype=float)
    ndim = len(x0)
    sim = np.tile(x0, (ndim + 1, 1))
    for i in range(ndim):
        sim[i + 1, i] += step
    fval = np.array([fun(p) for p in sim])
    nfev = ndim + 1
    while nfev < maxfev:
        order = np.argsort(fval)
        sim, fval = sim[order], fval[order]
        if np.max(np.abs(sim[1:] - sim[0])) < xatol:
            break
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fun(xr)
        nfev += 1
        if fr < fval[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fval[-1] = xe, fe
            else:
                sim[-1], fval[-1] = xr, fr
        elif fr < fval[-2]:
            sim[-1], fval[-1] = xr, fr
        else:
            xc = centroid + 0.5 * ((xr if fr < fval[-1] else sim[-1]) - centroid)
            fc = fun(xc)
            nfev += 1
            if fc < min(fr, fval[-1]):
                sim[-1], fval[-1] = xc, fc
            else:
                for i in range(1, ndim + 1):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fval[i] = fun(sim[i])
                    nfev += 1
    best = int(np.argmin(fval))
    return sim[best].copy(), fval[best], nfev


def _standardize(x, value, P):
    """Slide along the degenerate maximum set to the theta2' = 0 representative.

    Minimises the wrap distance of the fourth angle under a hinge penalty
    keeping CH at the maximum.  If the fourth angle reaches 0 (mod pi) it is
    pinned there and the other three angles re-maximised; if the result
    would lose more than ~1e-12 of the maximum (isolated optimum), the
    original point is returned unchanged.
    """
    scale = max(1.0, abs(value))
    slack = 1e-13 * scale
    weight = 100.0 / scale
    nfev_total = 0

    def penalty(y):
        ch = _kernels.ch_eval(y[0], y[1], y[2], y[3], P)
        return _wrap_dist(y[3]) + weight * max(0.0, value - slack - ch)

    cur = np.asarray(x, dtype=float)
    for _ in range(50):
        if _wrap_dist(cur[3]) < 1e-9:
            break
        new, _, nfev = _nm_generic(penalty, cur, step=0.05, xatol=1e-10, maxfev=3000)
        nfev_total += nfev
        if np.max(np.abs(new - cur)) < 1e-12:
            cur = new
            break
        cur = new

    if _wrap_dist(cur[3]) > 1e-6:
        return np.asarray(x, dtype=float), nfev_total  # isolated maximum

    pinned4 = round(cur[3] / math.pi) * math.pi

    def neg_ch3(y):
        return -_kernels.ch_eval(y[0], y[1], y[2], pinned4, P)

    best3, fmin, nfev = _nm_generic(neg_ch3, cur[:3], step=0.01, xatol=1e-10, maxfev=6000)
    nfev_total += nfev
    if -fmin >= value - 1e-12 * scale:
        return np.array([best3[0], best3[1], best3[2], pinned4]), nfev_total
    return np.asarray(x, dtype=float), nfev_total


def _canonical_pick(x):
    """Canonical representative: angles mod pi, then the lexicographically
    smaller of the tuple and its pi-reflection (degrees rounded to 1e-4)."""
    a = np.asarray(x, dtype=float) % math.pi
    b = (math.pi - a) % math.pi
    key_a = tuple(round(math.degrees(v), 4) for v in a)
    key_b = tuple(round(math.degrees(v), 4) for v in b)
    return (a, key_a) if key_a <= key_b else (b, key_b)


def optimize_angles(state: EntangledState, arm1: MeasurementArm, arm2: MeasurementArm,
                    mode: str = "heralded", *, standardize: bool = True) -> OptimResult:
    """Maximise CH over the four analyser angles in [0, pi)^4.

    ``standardize=False`` skips the canonical-representative phase (the
    maximum value is unaffected); the loophole map uses this fast path where
    only the value matters.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    P = pack_params(state, arm1, arm2, mode)
    thetas = _grid_thetas()
    grid_vals, quads = _kernels.topk_cells(thetas, P, N_STARTS, objective="ch")

    step = math.radians(GRID_STEP_DEG)
    candidates = []
    evaluations = 0
    for q in quads:
        xb, fb, nfev, conv = _kernels.nelder_mead(q.copy(), P, step, XATOL, MAXFEV)
        evaluations += int(nfev)
        candidates.append((fb, xb, conv))

    # refinement starts from the grid cells, so the best candidate can never
    # fall below the best coarse-grid value
    best_val = max(fb for fb, _, _ in candidates)
    tol = TIE_REL * max(1.0, abs(best_val))
    tied = [(x, conv) for fb, x, conv in candidates if fb >= best_val - tol]

    picked = None
    for x, conv in tied:
        if standardize:
            x, nfev = _standardize(x, best_val, P)
            evaluations += nfev
        cand, key = _canonical_pick(x)
        if picked is None or key < picked[1]:
            picked = (cand, key, conv)

    angles, _, converged = picked
    settings = AngleSettings(*angles)
    result = ch_sum(state, arm1, arm2, settings, mode)
    return OptimResult(settings, result.ch, result.ratio, mode, converged, evaluations)


def phase_sweep(state: EntangledState, arm1: MeasurementArm, arm2: MeasurementArm,
                phases, mode: str = "heralded"):
    """Re-optimise the angles for each value of the entanglement phase.

    Returns a list of (phase, OptimResult); any relative phase between the
    two crystal amplitudes reduces the attainable violation, down to none at
    pi/2.
    """
    phases = list(phases)
    if not phases:
        raise ValueError("phases must be a non-empty sequence")
    out = []
    for phase in phases:
        s = EntangledState(state.f_mag, float(phase), state.coherence)
        out.append((float(phase), optimize_angles(s, arm1, arm2, mode)))
    return out
