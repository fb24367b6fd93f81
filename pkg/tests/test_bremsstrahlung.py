import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relplasma import bremsstrahlung as br
from relplasma.gamma import IDENTITY, slash
from relplasma.kinematics import PlasmaState
from relplasma.quadrature import MCConfig, MCError

STATE = PlasmaState(10.0)
# nondegenerate electron plasma, T = m/200
HOT = PlasmaState(200.0, 0.95)
ION = br.IonPotentialModel(1, 0.01, 1.0)
MC = MCConfig(7, 8000, 16, 0.2)

vec3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def _four(p, m=1.0):
    return np.r_[math.sqrt(p @ p + m * m), p]


def _random_kinematics(rng):
    p_i, p_f, k = rng.normal(size=(3, 3))
    pol = np.cross(k, rng.normal(size=3))
    return p_i, p_f, k, pol / np.linalg.norm(pol)


@given(vec3)
def test_spinor_normalization(p):
    for s in (1, -1):
        u = br.spinor(p, s, br.PARTICLE, STATE)
        v = br.spinor(p, s, br.ANTIPARTICLE, STATE)
        assert u.bar() @ u.components == pytest.approx(1.0, abs=1e-12)
        assert v.bar() @ v.components == pytest.approx(-1.0, abs=1e-12)
        assert np.vdot(u.components, u.components).real == pytest.approx(u.energy, rel=1e-12)


@given(vec3)
def test_spinors_solve_dirac_equation(p):
    P = slash(_four(p))
    for s in (1, -1):
        u = br.spinor(p, s, br.PARTICLE, STATE).components
        v = br.spinor(p, s, br.ANTIPARTICLE, STATE).components
        assert np.abs((P - IDENTITY) @ u).max() < 1e-12 * (1 + np.abs(P).max())
        assert np.abs((P + IDENTITY) @ v).max() < 1e-12 * (1 + np.abs(P).max())


def test_spin_sum_completeness():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = rng.normal(size=3) * 2
        P = slash(_four(p))
        su = sum(np.outer(x.components, x.bar()) for x in
                 (br.spinor(p, s, br.PARTICLE, STATE) for s in (1, -1)))
        sv = sum(np.outer(x.components, x.bar()) for x in
                 (br.spinor(p, s, br.ANTIPARTICLE, STATE) for s in (1, -1)))
        assert np.abs(su - (P + IDENTITY) / 2).max() < 1e-12 * (1 + np.abs(P).max())
        assert np.abs(sv - (P - IDENTITY) / 2).max() < 1e-12 * (1 + np.abs(P).max())


def test_spinor_validation():
    with pytest.raises(ValueError):
        br.spinor([0, 0, 1], 0, br.PARTICLE, STATE)
    with pytest.raises(ValueError):
        br.spinor([0, 0, 1], 1, "quark", STATE)


def test_ion_potential():
    e = math.sqrt(STATE.e2)
    assert br.ion_potential(1.0, br.IonPotentialModel(2, 0.0), STATE) == pytest.approx(2 * e)
    assert br.ion_potential(0.0, br.IonPotentialModel(1, 0.5), STATE) == pytest.approx(4 * e)
    with pytest.raises(ZeroDivisionError):
        br.ion_potential(0.0, br.IonPotentialModel(1, 0.0), STATE)
    for bad in ({"Z": 0}, {"Z": 1.5}, {"kappa": -1.0}, {"n_ion": -1.0}):
        with pytest.raises(ValueError):
            br.IonPotentialModel(**bad)


def test_spin_sum_trace_matches_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(50):
        p_i, p_f, k, pol = _random_kinematics(rng)
        for sp in (br.ELECTRON, br.POSITRON):
            t = br.spin_summed_trace(p_i, p_f, k, pol, sp, STATE)
            e = br.spin_summed_explicit(p_i, p_f, k, pol, sp, STATE)
            assert t == pytest.approx(e, rel=1e-8)


def test_spin_sum_trace_batched():
    rng = np.random.default_rng(7)
    pts = [_random_kinematics(rng) for _ in range(6)]
    k = pts[0][2]
    pol = pts[0][3]
    P_i = np.array([p[0] for p in pts])
    P_f = np.array([p[1] for p in pts])
    batch = br.spin_summed_trace(P_i, P_f, k, pol, br.ELECTRON, STATE)
    single = [br.spin_summed_trace(a, b, k, pol, br.ELECTRON, STATE) for a, b in zip(P_i, P_f)]
    np.testing.assert_allclose(batch, single, rtol=1e-13)


def test_amplitude_linear_in_polarization():
    rng = np.random.default_rng(8)
    p_i, p_f, k, _ = _random_kinematics(rng)
    e1 = np.cross(k, [1.0, 0, 0])
    e2 = np.cross(k, e1)
    a, b = 0.3 - 0.2j, 1.7
    for sp in (br.ELECTRON, br.POSITRON):
        A1 = br.transition_amplitude(p_i, 1, p_f, -1, k, e1, sp, STATE)
        A2 = br.transition_amplitude(p_i, 1, p_f, -1, k, e2, sp, STATE)
        A = br.transition_amplitude(p_i, 1, p_f, -1, k, a * e1 + b * e2, sp, STATE)
        assert A == pytest.approx(a * A1 + b * A2, rel=1e-12)


def test_amplitude_validation():
    with pytest.raises(ValueError):
        br.transition_amplitude([0, 0, 1], 1, [0, 1, 0], 1, [0, 0, 1], [0, 0, 1],
                                br.ELECTRON, STATE)
    with pytest.raises(ValueError):
        br.transition_amplitude([0, 0, 1], 1, [0, 1, 0], 1, [0, 0, 0], [1, 0, 0],
                                br.ELECTRON, STATE)


def _rotation(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.linalg.det(q))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_spin_sum_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    p_i, p_f, k, pol = _random_kinematics(rng)
    R = _rotation(rng)
    for sp in (br.ELECTRON, br.POSITRON):
        a = br.spin_summed_trace(p_i, p_f, k, pol, sp, STATE)
        b = br.spin_summed_trace(R @ p_i, R @ p_f, R @ k, R @ pol, sp, STATE)
        assert b == pytest.approx(a, rel=1e-9, abs=1e-14)


def test_no_carriers_no_absorption():
    cold = PlasmaState(1e5, 0.0)
    alpha, err = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], cold, ION, MC)
    assert alpha == 0.0 and err == 0.0
    res = br.absorption_coefficient(0.01, cold, ION, MC)
    assert res.alpha == 0.0


def test_charge_squared_scaling_exact():
    a1, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    a2, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT,
                               br.IonPotentialModel(2, 0.01, 1.0), MC)
    assert a2 / a1 == pytest.approx(4.0, rel=1e-12)


def test_ion_density_multiplies():
    a1, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    a3, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT,
                               br.IonPotentialModel(1, 0.01, 3.0), MC)
    assert a3 / a1 == pytest.approx(3.0, rel=1e-12)


def test_polarization_and_direction_independent():
    ref, err = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    for k, pol in (([0, 0, 1e-3], [0, 1, 0]), ([1e-3, 0, 0], [0, 0, 1])):
        a, e = br.absorption_at_k(0.01, k, pol, HOT, ION, MCConfig(11, 8000, 16, 0.2))
        assert abs(a - ref) < 4 * math.hypot(err, e)


def test_charge_conjugate_plasma_same_absorption():
    a, ea = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    b, eb = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], PlasmaState(200.0, -0.95),
                               ION, MCConfig(9, 8000, 16, 0.2))
    assert abs(a - b) < 4 * math.hypot(ea, eb)


def test_force_correlation_relation():
    w = 0.01
    re, _ = br.force_force_re(w, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC, return_error=True)
    alpha, _ = br.absorption_at_k(w, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    assert re < 0
    assert alpha == pytest.approx(-HOT.beta * HOT.e2 / w**2 * re, rel=1e-12)
    with pytest.raises(ValueError):
        br.force_force_re(0.0, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MC)
    with pytest.raises(ValueError):
        br.force_force_re(0.01, [0, 0, 0], [1, 0, 0], HOT, ION, MC)


def test_detailed_balance_in_debug_mode(monkeypatch):
    monkeypatch.setenv("RELPLASMA_DEBUG", "1")
    alpha, _ = br.absorption_at_k(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION,
                                  MCConfig(3, 2000, 8, 1.0))
    assert alpha > 0


def test_mc_target_enforced():
    with pytest.raises(MCError):
        br.force_force_re(0.01, [0, 0, 1e-3], [1, 0, 0], HOT, ION, MCConfig(3, 64, 4, 1e-6))


def test_absorption_coefficient_result():
    res = br.absorption_coefficient(0.01, HOT, ION, MC, k_seq=(2e-3, 1e-3))
    assert res.alpha > 0 and res.mc_error > 0
    assert res.k_values_used == (2e-3, 1e-3) and len(res.alpha_by_k) == 2
    assert res.collision_nu_re > 0
    assert "RWA-questionable" in br.absorption_coefficient(
        2.5, HOT, ION, MCConfig(1, 4000, 8, 1.0), k_seq=(2e-3, 1e-3)).flags


def test_extrapolation_guard():
    with pytest.raises(br.ExtrapolationError) as info:
        br.absorption_coefficient(0.01, HOT, ION, MC, k_seq=(0.3, 1e-3), max_k_change=1e-6)
    assert len(info.value.values) == 2
    with pytest.raises(ValueError):
        br.absorption_coefficient(0.01, HOT, ION, MC, k_seq=(1e-3, 2e-3))


def test_fit_k_slope():
    ks = [0.4, 0.2, 0.1]
    assert br.fit_k_slope(ks, [3 * k**2 for k in ks]) == pytest.approx(2.0)
    assert math.isnan(br.fit_k_slope(ks, [0.0, 1.0, 2.0]))
