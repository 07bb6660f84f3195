"""Clauser-Horne sum, violation ratio, and fringe visibility.

The CH combination over four analyser settings (theta1, theta2, theta1',
theta2') is

    CH = N(t1,t2) - N(t1,t2') + N(t1',t2) + N(t1',t2') - D1(t1') - D2(t2)

which is <= 0 for every local realistic model.  The two subtracted terms
come in two flavours ("mode"):

* ``heralded`` - coincidences with the other arm's polariser removed, the
  experimentally measured N(theta1',inf) and N(inf,theta2);
* ``strict``   - true single-arm detection probabilities, the form whose
  efficiency dependence creates the detection loophole.

The ratio R = positive-part / subtracted-part exceeds 1 exactly when CH > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .quantum_model import (
    EntangledState,
    MeasurementArm,
    coincidence_no_polarizer,
    coincidence_probability,
    singles_probability,
)

if TYPE_CHECKING:  # pragma: no cover
    from .montecarlo import CountRecord

__all__ = [
    "MODES",
    "AngleSettings",
    "ChBreakdown",
    "ch_sum",
    "ch_from_counts",
    "visibility",
]

MODES = ("heralded", "strict")

#: canonical order of the six CH configurations
CONFIG_LABELS = ("t1t2", "t1t2p", "t1pt2", "t1pt2p", "t1p_inf", "inf_t2")

#: sign each configuration carries in the CH sum
CONFIG_SIGNS = (1.0, -1.0, 1.0, 1.0, -1.0, -1.0)


@dataclass(frozen=True)
class AngleSettings:
    """The four analyser angles of a CH measurement set, radians."""

    theta1: float
    theta2: float
    theta1p: float
    theta2p: float

    def __post_init__(self):
        for v in self.astuple():
            if not math.isfinite(v):
                raise ValueError(f"angles must be finite, got {v!r}")

    def astuple(self):
        return (self.theta1, self.theta2, self.theta1p, self.theta2p)

    def canonical(self) -> "AngleSettings":
        """Reduce each angle to [0, pi); all probabilities are pi-periodic."""
        return AngleSettings(*(v % math.pi for v in self.astuple()))

    @classmethod
    def from_degrees(cls, t1, t2, t1p, t2p) -> "AngleSettings":
        return cls(*(math.radians(v) for v in (t1, t2, t1p, t2p)))

    def degrees(self):
        return tuple(math.degrees(v) for v in self.astuple())


@dataclass(frozen=True)
class ChBreakdown:
    """The six CH configuration values plus derived quantities.

    Terms are stored unsigned (as measured); ``ch`` applies the signs
    (+,-,+,+,-,-).  Units follow the input: probabilities per pair from
    ``ch_sum``, raw counts from ``ch_from_counts``.  Standard errors are
    populated only in the counts path; ``ratio`` is NaN with
    ``ratio_defined=False`` when its denominator vanishes.
    """

    n_t1t2: float
    n_t1t2p: float
    n_t1pt2: float
    n_t1pt2p: float
    n_t1p_inf: float
    n_inf_t2: float
    ch: float
    ratio: float
    ratio_defined: bool = True
    sigma_ch: Optional[float] = None
    sigma_ratio: Optional[float] = None
    z_score: Optional[float] = None

    def terms(self):
        return (self.n_t1t2, self.n_t1t2p, self.n_t1pt2,
                self.n_t1pt2p, self.n_t1p_inf, self.n_inf_t2)


def _breakdown(terms, sigma_ch=None, sigma_ratio=None, z=None) -> ChBreakdown:
    n1, n2, n3, n4, n5, n6 = terms
    ch = n1 - n2 + n3 + n4 - n5 - n6
    den = n5 + n6
    if den > 0:
        ratio = (n1 - n2 + n3 + n4) / den
        defined = True
    else:
        ratio = math.nan
        defined = False
    return ChBreakdown(n1, n2, n3, n4, n5, n6, ch, ratio, defined,
                       sigma_ch, sigma_ratio, z)


def ch_sum(state: EntangledState, arm1: MeasurementArm, arm2: MeasurementArm,
           settings: AngleSettings, mode: str = "heralded") -> ChBreakdown:
    """Evaluate the CH sum analytically for the given state and hardware."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t1, t2, t1p, t2p = settings.astuple()
    n1 = coincidence_probability(state, arm1, arm2, t1, t2)
    n2 = coincidence_probability(state, arm1, arm2, t1, t2p)
    n3 = coincidence_probability(state, arm1, arm2, t1p, t2)
    n4 = coincidence_probability(state, arm1, arm2, t1p, t2p)
    if mode == "heralded":
        n5 = coincidence_no_polarizer(state, arm1, arm2, t1p, which_arm_removed=2)
        n6 = coincidence_no_polarizer(state, arm1, arm2, t2, which_arm_removed=1)
    else:
        n5 = singles_probability(state, arm1, t1p, which_arm=1)
        n6 = singles_probability(state, arm2, t2, which_arm=2)
    return _breakdown((n1, n2, n3, n4, n5, n6))


def ch_from_counts(counts: "CountRecord") -> ChBreakdown:
    """CH, R and their standard errors from measured coincidence counts.

    Poisson first-order propagation: every configuration enters CH with
    coefficient +-1, so sigma_CH^2 is simply the sum of all six counts.
    sigma_R comes from independent-ratio propagation of the numerator and
    denominator sums.
    """
    vals = []
    for label in CONFIG_LABELS:
        cfg = counts.by_label(label)
        if cfg.coincidences < 0:
            raise ValueError(f"negative count in configuration {label!r}")
        vals.append(float(cfg.coincidences))
    n1, n2, n3, n4, n5, n6 = vals
    total = sum(vals)

    if total == 0:
        return _breakdown(vals, sigma_ch=None, sigma_ratio=None, z=None)

    sigma_ch = math.sqrt(total)
    num = n1 - n2 + n3 + n4
    den = n5 + n6
    var_num = n1 + n2 + n3 + n4
    var_den = n5 + n6
    if den > 0:
        sigma_r = math.sqrt(var_num / den**2 + num**2 * var_den / den**4)
    else:
        sigma_r = None
    ch = num - den
    z = ch / sigma_ch
    return _breakdown(vals, sigma_ch=sigma_ch, sigma_ratio=sigma_r, z=z)


def _golden_refine(fun, lo, hi, tol):
    """Golden-section maximisation of fun on [lo, hi] to within tol."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def visibility(state: EntangledState, arm1: MeasurementArm, arm2: MeasurementArm,
               theta1_fixed: float, tol: float = 1e-6) -> float:
    """Fringe visibility (Nmax - Nmin) / (Nmax + Nmin) scanning arm 2.

    Arm 1 is held at ``theta1_fixed`` while the coincidence rate is scanned
    over theta2 in [0, pi).  Extrema are bracketed on a 1-degree grid and
    refined by golden section to ``tol`` radians.
    """
    def n_of(t2):
        return coincidence_probability(state, arm1, arm2, theta1_fixed, t2)

    step = math.radians(1.0)
    grid = [i * step for i in range(181)]
    vals = [n_of(t) for t in grid]

    i_max = max(range(len(vals)), key=vals.__getitem__)
    i_min = min(range(len(vals)), key=vals.__getitem__)

    def refined(idx, sign):
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, len(grid) - 1)]
        t = _golden_refine(lambda x: sign * n_of(x), lo, hi, tol)
        return n_of(t)

    n_max = max(vals[i_max], refined(i_max, +1.0))
    n_min = min(vals[i_min], refined(i_min, -1.0))
    total = n_max + n_min
    if total <= 0:
        return 0.0
    v = (n_max - n_min) / total
    # clip float dust so the contract V in [0, 1] is exact
    return min(max(v, 0.0), 1.0)
