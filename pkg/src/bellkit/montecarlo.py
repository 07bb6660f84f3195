"""Seeded counting-experiment simulation with Poisson statistics.

Counts are drawn as per-configuration Poisson aggregates (the CH estimate
needs nothing finer than totals).  For each of the six CH configurations:

* true coincidences ~ Poisson(pair_rate * duration * p_cc)
* singles per arm   ~ Poisson(pair_rate * duration * p_single
                              + background_rate * duration)
* accidental coincidences ~ Poisson(S1 * S2 * tau / duration), the textbook
  estimator with S_i the expected singles counts and tau the coincidence
  window; they are added to the reported coincidences.

Background reaches coincidences only through the accidental term (dark
counts are uncorrelated between arms).

Reproducibility: every configuration draws from its own substream derived
from (seed, configuration index) via ``numpy.random.SeedSequence`` spawn
keys, so results are independent of evaluation order; replica k of a study
uses seed + k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .inequality import CONFIG_LABELS, CONFIG_SIGNS, AngleSettings, ch_from_counts
from .quantum_model import (
    EntangledState,
    MeasurementArm,
    coincidence_no_polarizer,
    coincidence_probability,
    singles_probability,
)

__all__ = ["RunConfig", "ConfigCounts", "CountRecord", "ReplicaSummary",
           "simulate_run", "replicate_study", "expected_rates",
           "analytic_ch_counts", "counts_csv"]

# largest Poisson mean the integer draw supports
_MAX_LAM = float(2**62)

CSV_HEADER = "config_label,coincidences,singles1,singles2,accidentals,duration_s"


@dataclass(frozen=True)
class RunConfig:
    pair_rate: float            # produced pairs per second
    duration: float             # seconds per configuration
    coincidence_window: float   # seconds (tau)
    seed: int
    state: EntangledState
    arm1: MeasurementArm
    arm2: MeasurementArm
    settings: AngleSettings

    def __post_init__(self):
        # pair_rate = 0 is a legal degenerate source (all counts zero)
        if not (math.isfinite(self.pair_rate) and self.pair_rate >= 0):
            raise ValueError(f"pair_rate must be >= 0 and finite, got {self.pair_rate!r}")
        for name in ("duration", "coincidence_window"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class ConfigCounts:
    label: str
    coincidences: int
    singles1: int
    singles2: int
    accidentals: int
    duration_s: float


@dataclass(frozen=True)
class CountRecord:
    configs: Tuple[ConfigCounts, ...]

    def __post_init__(self):
        labels = tuple(c.label for c in self.configs)
        if labels != CONFIG_LABELS:
            raise ValueError(f"expected configurations {CONFIG_LABELS}, got {labels}")

    def by_label(self, label: str) -> ConfigCounts:
        for c in self.configs:
            if c.label == label:
                return c
        raise ValueError(f"no configuration labelled {label!r}")


def _config_probabilities(state, arm1, arm2, settings):
    """(p_coincidence, p_singles1, p_singles2) for the six configurations."""
    t1, t2, t1p, t2p = settings.astuple()
    rows = []
    for label in CONFIG_LABELS:
        if label == "t1t2":
            a1, a2 = t1, t2
        elif label == "t1t2p":
            a1, a2 = t1, t2p
        elif label == "t1pt2":
            a1, a2 = t1p, t2
        elif label == "t1pt2p":
            a1, a2 = t1p, t2p
        elif label == "t1p_inf":
            a1, a2 = t1p, None
        else:  # inf_t2
            a1, a2 = None, t2

        if a1 is not None and a2 is not None:
            p_cc = coincidence_probability(state, arm1, arm2, a1, a2)
            p_s1 = singles_probability(state, arm1, a1, which_arm=1)
            p_s2 = singles_probability(state, arm2, a2, which_arm=2)
        elif a2 is None:
            p_cc = coincidence_no_polarizer(state, arm1, arm2, a1, which_arm_removed=2)
            p_s1 = singles_probability(state, arm1, a1, which_arm=1)
            p_s2 = arm2.detector.efficiency  # bare detector sees every pair photon
        else:
            p_cc = coincidence_no_polarizer(state, arm1, arm2, a2, which_arm_removed=1)
            p_s1 = arm1.detector.efficiency
            p_s2 = singles_probability(state, arm2, a2, which_arm=2)
        rows.append((label, p_cc, p_s1, p_s2))
    return rows


def expected_rates(config: RunConfig):
    """Expected counts per configuration: dict label -> (coincidences,
    singles1, singles2, accidentals).  Useful as the analytic reference for
    the simulated draws."""
    out = {}
    np_ = config.pair_rate * config.duration
    for label, p_cc, p_s1, p_s2 in _config_probabilities(
            config.state, config.arm1, config.arm2, config.settings):
        lam_s1 = np_ * p_s1 + config.arm1.detector.background_rate * config.duration
        lam_s2 = np_ * p_s2 + config.arm2.detector.background_rate * config.duration
        lam_acc = lam_s1 * lam_s2 * config.coincidence_window / config.duration
        out[label] = (np_ * p_cc + lam_acc, lam_s1, lam_s2, lam_acc)
    return out


def _substream(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def simulate_run(config: RunConfig) -> CountRecord:
    """Draw one CountRecord; deterministic for a given config (incl. seed)."""
    np_ = config.pair_rate * config.duration
    rows = _config_probabilities(config.state, config.arm1, config.arm2, config.settings)
    configs = []
    for idx, (label, p_cc, p_s1, p_s2) in enumerate(rows):
        lam_cc = np_ * p_cc
        lam_s1 = np_ * p_s1 + config.arm1.detector.background_rate * config.duration
        lam_s2 = np_ * p_s2 + config.arm2.detector.background_rate * config.duration
        lam_acc = lam_s1 * lam_s2 * config.coincidence_window / config.duration
        for lam in (lam_cc, lam_s1, lam_s2, lam_acc):
            if lam > _MAX_LAM:
                raise ValueError(
                    f"expected count {lam:.3g} in configuration {label!r} exceeds "
                    f"the supported integer range")
        rng = _substream(config.seed, idx)
        true_cc = int(rng.poisson(lam_cc))
        s1 = int(rng.poisson(lam_s1))
        s2 = int(rng.poisson(lam_s2))
        acc = int(rng.poisson(lam_acc))
        configs.append(ConfigCounts(label, true_cc + acc, s1, s2, acc,
                                    config.duration))
    return CountRecord(tuple(configs))


@dataclass(frozen=True)
class ReplicaSummary:
    replicas: int
    ch_mean: float
    ch_empirical_sigma: float
    ch_propagated_sigma: float
    ratio_mean: float
    ratio_empirical_sigma: float
    z_mean: float
    low_statistics: bool      # too few replicas for a stable sigma estimate


def replicate_study(config: RunConfig, replicas: int) -> ReplicaSummary:
    """Repeat simulate_run with seeds seed+k and compare the empirical CH
    scatter to the Poisson-propagated error."""
    if replicas < 2:
        raise ValueError(f"replicas must be >= 2, got {replicas}")
    chs = np.empty(replicas)
    ratios = np.empty(replicas)
    sigmas = np.empty(replicas)
    zs = np.empty(replicas)
    for k in range(replicas):
        cfg = RunConfig(config.pair_rate, config.duration, config.coincidence_window,
                        config.seed + k, config.state, config.arm1, config.arm2,
                        config.settings)
        b = ch_from_counts(simulate_run(cfg))
        chs[k] = b.ch
        ratios[k] = b.ratio
        sigmas[k] = b.sigma_ch if b.sigma_ch is not None else np.nan
        zs[k] = b.z_score if b.z_score is not None else np.nan
    return ReplicaSummary(
        replicas=replicas,
        ch_mean=float(np.mean(chs)),
        ch_empirical_sigma=float(np.std(chs, ddof=1)),
        ch_propagated_sigma=float(np.nanmean(sigmas)),
        ratio_mean=float(np.nanmean(ratios)),
        ratio_empirical_sigma=float(np.nanstd(ratios, ddof=1)),
        z_mean=float(np.nanmean(zs)),
        low_statistics=replicas < 10,
    )


def analytic_ch_counts(config: RunConfig) -> float:
    """Expected CH in counts, accidental contributions included."""
    exp = expected_rates(config)
    return sum(sign * exp[label][0]
               for label, sign in zip(CONFIG_LABELS, CONFIG_SIGNS))


def counts_csv(record: CountRecord) -> str:
    lines = [CSV_HEADER]
    for c in record.configs:
        lines.append(f"{c.label},{c.coincidences},{c.singles1},{c.singles2},"
                     f"{c.accidentals},{c.duration_s:.9g}")
    return "\n".join(lines) + "\n"
