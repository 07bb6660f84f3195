import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bellkit import (
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

D = math.radians

angles_st = st.floats(-10.0, 10.0, allow_nan=False)
fmag_st = st.floats(0.0, 3.0)
phase_st = st.floats(-math.pi, math.pi)
coh_st = st.floats(0.0, 1.0)
eps_st = st.floats(0.0, 1.0)
eta_st = st.floats(0.0, 1.0)


def arm(eps_par=1.0, eps_perp=0.0, eta=1.0):
    return MeasurementArm(PolarizerChannel(eps_par, eps_perp), DetectorChannel(eta))


# --- pair_amplitudes -----------------------------------------------------------

def test_amplitudes_crossed_settings_symmetric_state():
    a_pp, _, _, _ = pair_amplitudes(EntangledState(1.0), 0.0, math.pi / 2)
    assert abs(a_pp) < 1e-15


def test_amplitudes_product_state_own_basis():
    amps = pair_amplitudes(EntangledState(0.0), math.pi / 2, math.pi / 2)
    assert amps[0] == pytest.approx(1.0, abs=1e-15)
    for a in amps[1:]:
        assert abs(a) < 1e-15


def test_amplitudes_frozen_derived_values():
    # frozen from the independent <theta1 theta2|Psi> contraction
    amps = pair_amplitudes(EntangledState(0.4), D(72.24), D(45.0))
    expected = (0.759683553027523, 0.587132234372750,
                -0.053674009161588, 0.485052305798521)
    for a, e in zip(amps, expected):
        assert a.real == pytest.approx(e, abs=1e-14)
        assert a.imag == 0.0
    # and against the oracle computed live
    psi = np.kron(oracles.H, oracles.H) + 0.4 * np.kron(oracles.V, oracles.V)
    basis = [np.kron(oracles.ket(D(72.24)), oracles.ket(D(45.0))),
             np.kron(oracles.ket(D(72.24)), oracles.ket_perp(D(45.0))),
             np.kron(oracles.ket_perp(D(72.24)), oracles.ket(D(45.0))),
             np.kron(oracles.ket_perp(D(72.24)), oracles.ket_perp(D(45.0)))]
    for a, b in zip(amps, basis):
        assert a == pytest.approx(complex(np.vdot(b, psi)), abs=1e-14)


def test_amplitudes_reject_non_finite():
    with pytest.raises(ValueError):
        pair_amplitudes(EntangledState(1.0), math.nan, 0.0)


# --- coincidence_probability ---------------------------------------------------

def test_coincidence_perfect_anticorrelation():
    assert coincidence_probability(EntangledState(1.0), ideal_arm(), ideal_arm(),
                                   0.0, math.pi / 2) == pytest.approx(0.0, abs=1e-15)


def test_coincidence_parallel_45():
    assert coincidence_probability(EntangledState(1.0), ideal_arm(), ideal_arm(),
                                   D(45), D(45)) == pytest.approx(0.5, abs=1e-15)


def test_coincidence_frozen_derived_value():
    p = coincidence_probability(EntangledState(0.4), ideal_arm(), ideal_arm(),
                                D(72.24), D(45.0))
    assert p == pytest.approx(0.4975164661556222, abs=1e-14)
    assert p == pytest.approx(
        oracles.coincidence(0.4, 0.0, 1.0, D(72.24), D(45.0)), abs=1e-14)


def test_coincidence_result_in_unit_interval():
    for f, t1, t2 in [(0.0, 0.3, 1.2), (1.0, 2.0, 0.1), (2.5, 1.0, 1.0)]:
        p = coincidence_probability(EntangledState(f), ideal_arm(), ideal_arm(), t1, t2)
        assert 0.0 <= p <= 1.0


# --- coincidence_no_polarizer ---------------------------------------------------

@pytest.mark.parametrize("theta", [0.0, 0.4, 1.0, 2.5])
def test_no_polarizer_symmetric_state_angle_independent(theta):
    # the f=1 single-photon state is unpolarised: the polariser marginal is
    # (s^2 + c^2)/(1 + |f|^2) = 1/2 at every angle
    p = coincidence_no_polarizer(EntangledState(1.0), ideal_arm(), ideal_arm(),
                                 theta, which_arm_removed=2)
    assert p == pytest.approx(0.5, abs=1e-14)
    assert p == pytest.approx(
        oracles.coincidence_no_pol(1.0, 0.0, 1.0, theta, 2), abs=1e-14)


def test_no_polarizer_product_state_h_passing():
    p = coincidence_no_polarizer(EntangledState(0.0), ideal_arm(), ideal_arm(),
                                 math.pi / 2, which_arm_removed=2)
    assert p == pytest.approx(1.0, abs=1e-14)


def test_no_polarizer_frozen_derived_value():
    a = arm(0.98, 1e-4 / 0.98, 0.7)
    p = coincidence_no_polarizer(EntangledState(0.4), a, a, D(17.76),
                                 which_arm_removed=2)
    assert p == pytest.approx(0.09862837071841758, abs=1e-14)
    assert p == pytest.approx(
        oracles.coincidence_no_pol(0.4, 0.0, 1.0, D(17.76), 2,
                                   e=(0.98, 1e-4 / 0.98), eta1=0.7, eta2=0.7),
        abs=1e-14)


def test_no_polarizer_invalid_enum():
    with pytest.raises(ValueError):
        coincidence_no_polarizer(EntangledState(1.0), ideal_arm(), ideal_arm(), 0.0, 3)


# --- singles_probability ---------------------------------------------------------

def test_singles_symmetric_state_half():
    p = singles_probability(EntangledState(1.0), ideal_arm(), D(30), which_arm=1)
    assert p == pytest.approx(0.5, abs=1e-14)
    assert p == pytest.approx(oracles.singles(1.0, 0.0, 1.0, D(30), 1), abs=1e-14)


def test_singles_zero_efficiency():
    p = singles_probability(EntangledState(0.7), arm(eta=0.0), 1.0, which_arm=2)
    assert p == 0.0


def test_singles_derived_value_at_45deg():
    # the 45-degree polariser marginal is exactly 1/2, so eta=0.7 gives 0.35
    p = singles_probability(EntangledState(0.4), arm(eta=0.7), D(45), which_arm=1)
    assert p == pytest.approx(0.35, abs=1e-14)
    assert p == pytest.approx(oracles.singles(0.4, 0.0, 1.0, D(45), 1, eta=0.7),
                              abs=1e-14)


def test_singles_invalid_enum():
    with pytest.raises(ValueError):
        singles_probability(EntangledState(1.0), ideal_arm(), 0.0, which_arm=0)


# --- invariants -------------------------------------------------------------------

@given(f=fmag_st, phase=phase_st, mu=coh_st, t1=angles_st, t2=angles_st)
@settings(max_examples=200, deadline=None)
def test_normalization_over_complete_basis(f, phase, mu, t1, t2):
    s = EntangledState(f, phase, mu)
    a = ideal_arm()
    total = sum(
        coincidence_probability(s, a, a, t1 + d1, t2 + d2)
        for d1 in (0.0, math.pi / 2)
        for d2 in (0.0, math.pi / 2)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


@given(f=fmag_st, phase=phase_st, mu=coh_st, t1=angles_st, t2=angles_st,
       e1p=eps_st, e1x=eps_st, e2p=eps_st, e2x=eps_st, n1=eta_st, n2=eta_st)
@settings(max_examples=200, deadline=None)
def test_arm_swap_symmetry(f, phase, mu, t1, t2, e1p, e1x, e2p, e2x, n1, n2):
    s = EntangledState(f, phase, mu)
    a1 = arm(max(e1p, e1x), min(e1p, e1x), n1)
    a2 = arm(max(e2p, e2x), min(e2p, e2x), n2)
    assert coincidence_probability(s, a1, a2, t1, t2) == pytest.approx(
        coincidence_probability(s, a2, a1, t2, t1), rel=1e-12, abs=1e-15)


@given(f=fmag_st, phase=phase_st, t1=angles_st, t2=angles_st,
       e1p=eps_st, e1x=eps_st, e2p=eps_st, e2x=eps_st, n1=eta_st, n2=eta_st)
@settings(max_examples=300, deadline=None)
def test_oracle_equivalence(f, phase, t1, t2, e1p, e1x, e2p, e2x, n1, n2):
    e1 = (max(e1p, e1x), min(e1p, e1x))
    e2 = (max(e2p, e2x), min(e2p, e2x))
    s = EntangledState(f, phase, 1.0)
    got = coincidence_probability(s, arm(*e1, n1), arm(*e2, n2), t1, t2)
    want = oracles.coincidence(f, phase, 1.0, t1, t2, e1, e2, n1, n2)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-15)


@given(f=fmag_st, phase1=phase_st, phase2=phase_st, mu1=coh_st, mu2=coh_st,
       t=angles_st)
@settings(max_examples=100, deadline=None)
def test_marginals_phase_and_coherence_independent(f, phase1, phase2, mu1, mu2, t):
    a = ideal_arm()
    s1 = EntangledState(f, phase1, mu1)
    s2 = EntangledState(f, phase2, mu2)
    assert coincidence_no_polarizer(s1, a, a, t, 2) == pytest.approx(
        coincidence_no_polarizer(s2, a, a, t, 2), abs=1e-15)
    assert singles_probability(s1, a, t, 1) == pytest.approx(
        singles_probability(s2, a, t, 1), abs=1e-15)


@given(f=fmag_st, phase=phase_st, mu=coh_st, t1=angles_st, t2=angles_st,
       lo=st.floats(0.05, 1.0), hi=st.floats(0.05, 1.0))
@settings(max_examples=150, deadline=None)
def test_monotone_in_efficiency_and_transmission(f, phase, mu, t1, t2, lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    s = EntangledState(f, phase, mu)
    base = arm()
    assert coincidence_probability(s, arm(eta=lo), base, t1, t2) <= \
        coincidence_probability(s, arm(eta=hi), base, t1, t2) + 1e-15
    assert coincidence_probability(s, base, arm(eta=lo), t1, t2) <= \
        coincidence_probability(s, base, arm(eta=hi), t1, t2) + 1e-15
    assert coincidence_probability(s, arm(eps_par=lo), base, t1, t2) <= \
        coincidence_probability(s, arm(eps_par=hi), base, t1, t2) + 1e-15


@given(f=fmag_st, phase=phase_st, mu=coh_st, t1=angles_st, t2=angles_st)
@settings(max_examples=150, deadline=None)
def test_pi_periodicity(f, phase, mu, t1, t2):
    s = EntangledState(f, phase, mu)
    a = ideal_arm()
    assert coincidence_probability(s, a, a, t1, t2) == pytest.approx(
        coincidence_probability(s, a, a, t1 + math.pi, t2 - math.pi),
        rel=1e-10, abs=1e-12)
    assert singles_probability(s, a, t1, 1) == pytest.approx(
        singles_probability(s, a, t1 + math.pi, 1), rel=1e-10, abs=1e-12)


# --- type invariants ---------------------------------------------------------------

def test_state_invariants_rejected():
    with pytest.raises(ValueError):
        EntangledState(-0.1)
    with pytest.raises(ValueError):
        EntangledState(1.0, 0.0, 1.5)
    with pytest.raises(ValueError):
        EntangledState(math.inf)


def test_polarizer_invariants_rejected():
    with pytest.raises(ValueError):
        PolarizerChannel(0.5, 0.6)  # eps_perp > eps_par
    with pytest.raises(ValueError):
        PolarizerChannel(1.2, 0.0)


def test_detector_invariants_rejected():
    with pytest.raises(ValueError):
        DetectorChannel(1.3)
    with pytest.raises(ValueError):
        DetectorChannel(0.9, -1.0)


def test_extinction_ratio():
    assert PolarizerChannel(0.98, 1e-4 / 0.98).extinction_ratio() == pytest.approx(1e-4)
