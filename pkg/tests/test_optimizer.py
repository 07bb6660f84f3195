import math

import numpy as np
import pytest

import oracles
from bellkit import (
    AngleSettings,
    DetectorChannel,
    EntangledState,
    MeasurementArm,
    PolarizerChannel,
    ch_sum,
    ideal_arm,
    optimize_angles,
    phase_sweep,
)

CLASSIC_F1 = (67.5, 45.0, 22.5, 0.0)


def arm(eps_par=1.0, eps_perp=0.0, eta=1.0):
    return MeasurementArm(PolarizerChannel(eps_par, eps_perp), DetectorChannel(eta))


def assert_angles_close(got_deg, want_deg, tol):
    """Compare settings modulo the exact pi-reflection symmetry."""
    refl = tuple((180.0 - v) % 180.0 for v in want_deg)
    direct = max(abs(g - w) for g, w in zip(got_deg, want_deg))
    mirrored = max(abs(g - w) for g, w in zip(got_deg, refl))
    assert min(direct, mirrored) < tol, (got_deg, want_deg)


def test_maximal_state_optimum(warm_kernels):
    res = optimize_angles(EntangledState(1.0), ideal_arm(), ideal_arm())
    assert res.converged
    assert res.ch == pytest.approx((math.sqrt(2.0) - 1.0) / 2.0, abs=1e-9)
    assert res.ratio == pytest.approx(1.2071067811865475, abs=1e-6)
    assert_angles_close(res.settings.degrees(), CLASSIC_F1, tol=0.01)


def test_quoted_optimum_is_self_consistent_at_f042(warm_kernels):
    # the quoted angle set / ratio pair is generated by f = 0.42
    res = optimize_angles(EntangledState(0.42), ideal_arm(), ideal_arm())
    assert_angles_close(res.settings.degrees(), (72.24, 45.0, 17.76, 0.0), tol=0.2)
    assert res.ratio == pytest.approx(1.16, abs=0.005)


def test_f04_true_optimum_value(warm_kernels):
    res = optimize_angles(EntangledState(0.4), ideal_arm(), ideal_arm())
    assert res.ch == pytest.approx(oracles.ch_max_closed_form(0.4), rel=1e-10)
    # optimum angle structure: theta2 = 45, theta2' = 0, theta1 + theta1' = 90
    d = res.settings.degrees()
    assert d[1] == pytest.approx(45.0, abs=1e-3)
    assert d[3] == pytest.approx(0.0, abs=1e-3)
    assert d[0] + d[2] == pytest.approx(90.0, abs=1e-3)


@pytest.mark.parametrize("f", [0.05, 0.2, 0.6, 0.85, 1.0])
def test_value_matches_closed_form_and_grid(f, warm_kernels):
    res = optimize_angles(EntangledState(f), ideal_arm(), ideal_arm())
    assert res.ch == pytest.approx(oracles.ch_max_closed_form(f), rel=1e-9, abs=1e-12)
    grid_best = oracles.grid_ch_max(f, step_deg=2.0)
    assert res.ch >= grid_best - 1e-12


def test_classic_pattern_emerges(warm_kernels):
    # theta2 = 45, theta2' = 0 holds for every f with ideal heralded hardware
    for f in (0.1, 0.3, 0.5, 0.7, 0.9):
        d = optimize_angles(EntangledState(f), ideal_arm(), ideal_arm()).settings.degrees()
        assert d[1] == pytest.approx(45.0, abs=1e-3)
        assert d[3] == pytest.approx(0.0, abs=1e-3)


def test_control_angles_give_smaller_violation(warm_kernels):
    s = EntangledState(0.4)
    own = optimize_angles(s, ideal_arm(), ideal_arm())
    control = ch_sum(s, ideal_arm(), ideal_arm(),
                     AngleSettings.from_degrees(*CLASSIC_F1))
    assert control.ch < own.ch


def test_reported_ch_matches_reevaluation(warm_kernels):
    cases = [
        (EntangledState(1.0), ideal_arm(), ideal_arm(), "heralded"),
        (EntangledState(0.4), ideal_arm(), ideal_arm(), "heralded"),
        (EntangledState(0.7, 0.2, 0.95), arm(0.98, 1e-4 / 0.98, 0.9),
         arm(0.97, 0.001, 0.85), "strict"),
    ]
    for s, a1, a2, mode in cases:
        res = optimize_angles(s, a1, a2, mode)
        again = ch_sum(s, a1, a2, res.settings, mode)
        assert res.ch == pytest.approx(again.ch, rel=1e-12, abs=1e-15)
        assert res.ratio == pytest.approx(again.ratio, rel=1e-12, abs=1e-15)


def test_never_below_coarse_grid_imperfect_hardware(warm_kernels):
    # independent 2-degree grid maximum, strict mode with losses
    eta = 0.85
    res = optimize_angles(EntangledState(0.5), arm(eta=eta), arm(eta=eta), "strict")
    grid_best = oracles.grid_ch_max(0.5, step_deg=2.0, eta=eta, strict=True)
    assert res.ch >= grid_best - 1e-12


def test_nonviolating_input_returns_nonpositive(warm_kernels):
    res = optimize_angles(EntangledState(0.0), ideal_arm(), ideal_arm())
    assert res.converged
    assert res.ch <= 1e-12


@pytest.mark.parametrize("state", [
    EntangledState(0.0),                       # product state
    EntangledState(0.8, 0.0, 0.0),             # incoherent mixture
    EntangledState(1.0, math.pi / 2, 1.0),     # quadrature phase
])
def test_lhv_reachable_states_never_violate(state, warm_kernels):
    res = optimize_angles(state, ideal_arm(), ideal_arm())
    assert res.ch <= 1e-12


def test_canonical_angle_reduction():
    s = AngleSettings(3.5 * math.pi, -0.25 * math.pi, math.pi, 0.0).canonical()
    assert s.theta1 == pytest.approx(0.5 * math.pi)
    assert s.theta2 == pytest.approx(0.75 * math.pi)
    assert s.theta1p == pytest.approx(0.0)
    assert s.theta2p == 0.0


def test_reflection_symmetry_of_ch(warm_kernels):
    s = EntangledState(0.6, 0.4, 0.9)
    a1, a2 = arm(0.95, 0.01, 0.8), arm(0.9, 0.02, 0.75)
    rng = np.random.default_rng(7)
    for _ in range(50):
        t = rng.uniform(0, math.pi, size=4)
        direct = ch_sum(s, a1, a2, AngleSettings(*t), "strict").ch
        mirrored = ch_sum(s, a1, a2, AngleSettings(*(math.pi - t)), "strict").ch
        assert mirrored == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_determinism(warm_kernels):
    a = optimize_angles(EntangledState(0.4), ideal_arm(), ideal_arm())
    b = optimize_angles(EntangledState(0.4), ideal_arm(), ideal_arm())
    assert a.settings == b.settings
    assert a.ch == b.ch
    assert a.evaluations == b.evaluations


# --- phase sweep ---------------------------------------------------------------------

def test_phase_sweep_monotone_degradation(warm_kernels):
    phases = np.linspace(0.0, math.pi / 2, 11)
    results = phase_sweep(EntangledState(1.0), ideal_arm(), ideal_arm(), phases)
    chs = [r.ch for _, r in results]
    assert chs[0] == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-9)
    for lo, hi in zip(chs[1:], chs[:-1]):
        assert lo <= hi + 1e-10
    assert chs[-1] <= 1e-9


def test_phase_pi_equals_phase_zero(warm_kernels):
    results = phase_sweep(EntangledState(1.0), ideal_arm(), ideal_arm(),
                          [0.0, math.pi])
    ch0 = results[0][1].ch
    chpi = results[1][1].ch
    assert chpi == pytest.approx(ch0, abs=1e-9)


def test_phase_sweep_empty_rejected(warm_kernels):
    with pytest.raises(ValueError):
        phase_sweep(EntangledState(1.0), ideal_arm(), ideal_arm(), [])


def test_mode_validation(warm_kernels):
    with pytest.raises(ValueError):
        optimize_angles(EntangledState(1.0), ideal_arm(), ideal_arm(), "both")
