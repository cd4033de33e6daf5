import math

import numpy as np
import pytest

from conedeg.matcone import ConeClass, ConeSpec, SymMatrix, classify
from conedeg.operators import (
    FieldOracle,
    Jet2,
    OperatorSpec,
    conformal_A_psi,
    conformal_A_w,
    conformal_hessian_u,
    consistency_check,
    eval_F,
    eval_L,
    format_operator,
    kelvin,
    kelvin_transform,
    moving_sphere_radius,
    parse_operator,
    probe_L_conditions,
    u_to_psi_jet,
    u_to_w_jet,
)


def _jet(x, s, p, h):
    return Jet2(np.asarray(x, float), s, np.asarray(p, float), SymMatrix.from_dense(np.asarray(h, float)))


def _fd_jet(oracle: FieldOracle, x: np.ndarray, h: float = 1e-4):
    """Finite-difference jet of an oracle's value map; the independent route."""
    n = len(x)
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    v0 = oracle.value(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        vp, vm = oracle.value(x + ei), oracle.value(x - ei)
        grad[i] = (vp - vm) / (2 * h)
        hess[i, i] = (vp - 2 * v0 + vm) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            vpp = oracle.value(x + ei + ej)
            vpm = oracle.value(x + ei - ej)
            vmp = oracle.value(x - ei + ej)
            vmm = oracle.value(x - ei - ej)
            hess[i, j] = hess[j, i] = (vpp - vpm - vmp + vmm) / (4 * h**2)
    return v0, grad, hess


# ---------------------------------------------------------------------------
# field oracles agree with finite differences


def test_oracle_jets_match_finite_differences():
    rng = np.random.default_rng(2)
    oracles = [
        FieldOracle.constant(1.7, 3),
        FieldOracle.harmonic_power(3),
        FieldOracle.harmonic_power(5),
        FieldOracle.bubble(3),
        FieldOracle.bubble(4),
        FieldOracle.log_singular(2.0, 0.0, 1.0, 3),
        FieldOracle.polynomial({(2, 0, 0): 1.0, (0, 1, 1): -2.0, (1, 0, 0): 0.5, (0, 0, 0): 3.0}, 3),
    ]
    for oracle in oracles:
        for _ in range(5):
            x = rng.uniform(0.4, 1.2, size=oracle.n)  # away from singular points
            j = oracle.jet(x)
            v, g, h = _fd_jet(oracle, x)
            assert j.s == pytest.approx(v, rel=1e-12, abs=1e-12)
            np.testing.assert_allclose(j.p, g, rtol=2e-6, atol=2e-6)
            np.testing.assert_allclose(j.H.dense(), h, rtol=2e-4, atol=2e-4)


def test_polynomial_oracle_rejects_bad_exponents():
    with pytest.raises(ValueError):
        FieldOracle.polynomial({(1, 2): 1.0}, 3)


# ---------------------------------------------------------------------------
# the three conformal writings


def test_conformal_u_constant_field():
    j = _jet([0.3, -0.2, 0.5], 2.5, np.zeros(3), np.zeros((3, 3)))
    np.testing.assert_allclose(conformal_hessian_u(j, 3).dense(), 0.0, atol=1e-15)


def test_conformal_u_harmonic_power_is_flat():
    for n in (3, 4, 6):
        oracle = FieldOracle.harmonic_power(n)
        for x in (np.eye(n)[0], np.full(n, 0.7), np.linspace(0.2, 1.0, n)):
            a = conformal_hessian_u(oracle.jet(x), n).dense()
            assert np.max(np.abs(a)) <= 1e-12


def test_conformal_u_bubble_constant_curvature():
    # frozen fixture: the bubble's conformal Hessian is exactly 2I, every n, every x
    for n in (3, 4, 5):
        oracle = FieldOracle.bubble(n)
        for x in (np.zeros(n), 0.5 * np.eye(n)[0], np.full(n, -0.3)):
            a = conformal_hessian_u(oracle.jet(x), n).dense()
            np.testing.assert_allclose(a, 2.0 * np.eye(n), atol=1e-12)


def test_conformal_u_domain_errors():
    j = _jet([0.0, 0.0, 0.0], -1.0, np.zeros(3), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        conformal_hessian_u(j, 3)
    j2 = _jet([0.0, 0.0], 1.0, np.zeros(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        conformal_hessian_u(j2, 2)


def test_A_w_cases():
    j = _jet([1.0, 0.0, 0.0], 3.0, np.zeros(3), np.zeros((3, 3)))
    np.testing.assert_allclose(conformal_A_w(j).dense(), 0.0, atol=1e-15)
    # w(x) = x1 at a point with x1 = 0: the w * Hess term vanishes, leaving -I/2
    j = _jet([0.0, 0.5, -0.1], 0.0, [1.0, 0.0, 0.0], np.zeros((3, 3)))
    np.testing.assert_allclose(conformal_A_w(j).dense(), -0.5 * np.eye(3), atol=1e-15)


def test_A_w_random_matches_hand_formula():
    rng = np.random.default_rng(8)
    for _ in range(20):
        h = rng.normal(size=(4, 4))
        j = _jet(rng.normal(size=4), rng.normal(), rng.normal(size=4), h + h.T)
        expect = j.s * j.H.dense() - 0.5 * (j.p @ j.p) * np.eye(4)
        np.testing.assert_allclose(conformal_A_w(j).dense(), expect, atol=1e-14)


def test_A_psi_cases():
    j = _jet([0.0, 0.0, 0.0], 1.0, np.zeros(3), np.zeros((3, 3)))
    np.testing.assert_allclose(conformal_A_psi(j).dense(), 0.0, atol=1e-15)
    j = _jet([0.0, 0.0, 0.0], 0.0, [1.0, 0.0, 0.0], np.zeros((3, 3)))
    expect = np.diag([1.0, 0.0, 0.0]) - 0.5 * np.eye(3)
    np.testing.assert_allclose(conformal_A_psi(j).dense(), expect, atol=1e-15)


def test_A_psi_of_log_field_is_flat():
    # psi = 2 ln|x| is the n=3 log-gauge of |x|^{-1}; its gauge Hessian vanishes
    oracle = FieldOracle.harmonic_power(3)
    j = u_to_psi_jet(oracle.jet(np.array([1.0, 0.0, 0.0])), 3)
    assert j.s == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(j.p, [2.0, 0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(conformal_A_psi(j).dense(), 0.0, atol=1e-13)


def test_consistency_check_bundled_fields():
    report = consistency_check(FieldOracle.constant(1.0, 3), np.array([0.1, 0.2, 0.3]), 3, 1e-10)
    assert report.passed and report.deviation == 0.0
    report = consistency_check(FieldOracle.harmonic_power(3), np.array([2.0, 0.0, 0.0]), 3, 1e-10)
    assert report.passed
    report = consistency_check(FieldOracle.bubble(4), np.array([0.5, 0.0, 0.0, 0.0]), 4, 1e-10)
    assert report.passed


def test_consistency_check_random_points_all_oracles():
    rng = np.random.default_rng(12)
    for n in (3, 4, 5):
        for oracle in (FieldOracle.bubble(n), FieldOracle.harmonic_power(n), FieldOracle.constant(0.8, n)):
            for _ in range(50):
                x = rng.uniform(0.3, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
                report = consistency_check(oracle, x, n, 1e-10)
                assert report.passed, (oracle.name, x, report.deviation)


def test_consistency_check_rejects_nonpositive_u():
    oracle = FieldOracle.constant(-1.0, 3)
    with pytest.raises(ValueError):
        consistency_check(oracle, np.zeros(3), 3, 1e-10)


def test_w_jet_chain_rule_against_finite_differences():
    oracle = FieldOracle.bubble(3)
    x = np.array([0.4, -0.2, 0.6])
    jw = u_to_w_jet(oracle.jet(x), 3)
    w_oracle = FieldOracle(
        name="w", n=3,
        value=lambda y: oracle.value(y) ** (-2.0),
        grad=lambda y: np.zeros(3), hess=lambda y: np.zeros((3, 3)),
    )
    v, g, h = _fd_jet(w_oracle, x)
    assert jw.s == pytest.approx(v, rel=1e-12)
    np.testing.assert_allclose(jw.p, g, atol=2e-6)
    np.testing.assert_allclose(jw.H.dense(), h, atol=2e-4)


# ---------------------------------------------------------------------------
# eval_F


def test_eval_F_zero_gradient_returns_hessian():
    h = np.diag([1.0, -2.0, 0.5])
    j = _jet([0.0, 0.0, 0.0], 0.7, np.zeros(3), h)
    np.testing.assert_allclose(eval_F(j, OperatorSpec.quad_const(3.0, -1.0)).dense(), h, atol=1e-15)


def test_eval_F_quad_const_frozen():
    j = _jet([0.0, 0.0], 0.0, [1.0, 0.0], np.zeros((2, 2)))
    np.testing.assert_allclose(
        eval_F(j, OperatorSpec.quad_const(1.0, 1.0)).dense(), np.diag([0.0, -1.0]), atol=1e-15
    )


def test_conformal_equals_quad_one_half():
    rng = np.random.default_rng(21)
    conf = OperatorSpec.conformal()
    quad = OperatorSpec.quad_const(1.0, 0.5)
    for _ in range(100):
        h = rng.normal(size=(3, 3))
        j = _jet(rng.normal(size=3), rng.normal(), rng.normal(size=3), h + h.T)
        np.testing.assert_allclose(eval_F(j, conf).dense(), eval_F(j, quad).dense(), atol=1e-15)


def test_eval_F_linear_in_hessian():
    # dyadic data keeps every float operation exact, so equality is bitwise
    rng = np.random.default_rng(33)
    spec = OperatorSpec.quad_const(2.0, 0.5)
    for _ in range(20):
        h1 = rng.integers(-8, 9, size=(3, 3)).astype(float)
        h1 = h1 + h1.T
        h2 = rng.integers(-8, 9, size=(3, 3)).astype(float)
        h2 = h2 + h2.T
        x = rng.integers(-4, 5, size=3).astype(float)
        s = float(rng.integers(-4, 5))
        p = rng.integers(-4, 5, size=3).astype(float)
        f_sum = eval_F(_jet(x, s, p, h1 + h2), spec).dense()
        f_one = eval_F(_jet(x, s, p, h1), spec).dense()
        np.testing.assert_array_equal(f_sum - f_one, h2)


def test_degenerate_ellipticity_verdict_ordering():
    rng = np.random.default_rng(44)
    order = {ConeClass.OUTSIDE: 0, ConeClass.BOUNDARY: 1, ConeClass.INTERIOR: 2}
    spec = OperatorSpec.quad_const(1.0, 0.5)
    cones = [ConeSpec.posdef(), ConeSpec.gamma(2), ConeSpec.trace(), ConeSpec.one_pos()]
    for _ in range(30):
        h = rng.normal(size=(3, 3))
        j = _jet(rng.normal(size=3), rng.normal(), rng.normal(size=3), h + h.T)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        b = q @ np.diag(rng.uniform(0.1, 1.5, size=3)) @ q.T
        j_up = _jet(j.x, j.s, j.p, j.H.dense() + b)
        for cone in cones:
            v0, _ = classify(eval_F(j, spec), cone, tol=1e-9)
            v1, _ = classify(eval_F(j_up, spec), cone, tol=1e-9)
            assert order[v1] >= order[v0]


def test_rot_inv_eval():
    spec = OperatorSpec.rot_inv(lambda t: 0.0, lambda t: -t, name="rotinv:zero:neg_t")
    j = _jet([0.0, 0.0], 0.0, [3.0, 4.0], np.zeros((2, 2)))
    np.testing.assert_allclose(eval_F(j, spec).dense(), -5.0 * np.eye(2), atol=1e-14)


def test_general_l_shape_guard():
    bad = OperatorSpec.general_l(lambda x, s, p: np.zeros((2, 3)), m=2.0)
    with pytest.raises(ValueError):
        eval_L(bad, np.zeros(2), 0.0, np.ones(2))


# ---------------------------------------------------------------------------
# Kelvin transform


def test_kelvin_of_constant_is_power():
    one = FieldOracle.constant(1.0, 3)
    rng = np.random.default_rng(5)
    for _ in range(20):
        y = rng.normal(size=3)
        if np.linalg.norm(y) < 1e-3:
            continue
        got = kelvin(one, np.zeros(3), 1.0, y, 3)
        assert got == pytest.approx(float(np.linalg.norm(y) ** (-1.0)), rel=1e-13)


def test_kelvin_fixed_sphere():
    oracle = FieldOracle.bubble(3)
    x = np.array([0.3, -0.1, 0.2])
    lam = 0.7
    rng = np.random.default_rng(6)
    for _ in range(20):
        d = rng.normal(size=3)
        y = x + lam * d / np.linalg.norm(d)
        assert kelvin(oracle, x, lam, y, 3) == pytest.approx(oracle.value(y), rel=1e-13)


def test_kelvin_involution():
    rng = np.random.default_rng(7)
    for oracle in (FieldOracle.bubble(3), FieldOracle.constant(2.0, 3), FieldOracle.harmonic_power(3)):
        x = np.array([0.2, 0.1, -0.3])
        lam = 0.9
        once = kelvin_transform(oracle, x, lam, 3)
        twice = kelvin_transform(once, x, lam, 3)
        for _ in range(100):
            y = x + rng.normal(size=3)
            if np.linalg.norm(y - x) < 1e-2 or (oracle.name == "power" and np.linalg.norm(y) < 1e-2):
                continue
            # the inverted argument can also land on the power field's pole
            z = x + lam**2 * (y - x) / float((y - x) @ (y - x))
            if oracle.name == "power" and np.linalg.norm(z) < 1e-2:
                continue
            assert twice(y) == pytest.approx(oracle.value(y), rel=1e-10, abs=1e-12)


def test_kelvin_domain_errors():
    one = FieldOracle.constant(1.0, 3)
    with pytest.raises(ValueError):
        kelvin(one, np.zeros(3), 1.0, np.zeros(3), 3)
    with pytest.raises(ValueError):
        kelvin(one, np.zeros(3), -1.0, np.ones(3), 3)


def test_moving_sphere_radius():
    assert moving_sphere_radius(3.0, 3.0, 5) == pytest.approx(0.25)
    assert moving_sphere_radius(16.0, 1.0, 4) == pytest.approx(1.0 / 16.0)
    radii = [moving_sphere_radius(r, 1.0, 3) for r in (1.0, 2.0, 5.0, 100.0)]
    assert all(a >= b for a, b in zip(radii, radii[1:]))
    with pytest.raises(ValueError):
        moving_sphere_radius(1.0, 2.0, 3)
    with pytest.raises(ValueError):
        moving_sphere_radius(1.0, 0.0, 3)


# ---------------------------------------------------------------------------
# structural-condition probes


def test_probe_varying_quad_family_passes():
    spec = parse_operator("genL:tanh_quad")
    report = probe_L_conditions(spec, R=2.0, Lambda=8.0, m=2.0, samples=80, seed=0)
    assert report.all_ok(), report
    assert report.grad_x_bound.fitted_C is not None
    assert report.s_growth.fitted_C is not None and report.s_growth.fitted_C < 10.0
    assert report.radial_coercive.fitted_C is not None
    assert report.radial_coercive.fitted_theta_bar > 0.0


def test_probe_positive_beta_quad_passes_coercivity():
    report = probe_L_conditions(OperatorSpec.quad_const(1.0, 1.0), R=1.0, Lambda=8.0,
                                m=2.0, samples=80, seed=1)
    assert report.radial_coercive.ok
    assert report.s_monotone.ok


def test_probe_negative_beta_fails_coercivity():
    report = probe_L_conditions(OperatorSpec.quad_const(1.0, -1.0), R=1.0, Lambda=8.0,
                                m=2.0, samples=60, seed=2)
    assert not report.radial_coercive.ok
    w = report.radial_coercive.witness
    assert w is not None and w["violation"] < 0.0
    # the mirrored variant is what negative-beta operators satisfy instead
    assert report.radial_coercive_sup.ok


def test_probe_cubic_mix_monotonicity_fails():
    spec = parse_operator("genL:cubic_mix")
    report = probe_L_conditions(spec, R=3.0, Lambda=8.0, m=10.0, samples=120, seed=3)
    assert not report.s_monotone.ok
    w = report.s_monotone.witness
    assert w is not None and w["min_eig"] < 0.0
    # replay the witness: the matrix ordering genuinely fails there
    x, p = np.array(w["x"]), np.array(w["p"])
    diff = eval_L(spec, x, w["s_prime"], p) - eval_L(spec, x, w["s"], p)
    assert np.min(np.linalg.eigvalsh(diff)) < 0.0


def test_probe_rejects_zero_samples():
    with pytest.raises(ValueError):
        probe_L_conditions(OperatorSpec.conformal(), 1.0, 1.0, 2.0, 0, 0)


# ---------------------------------------------------------------------------
# textual forms


def test_operator_text_roundtrip():
    for text in ["conformal", "quad:1:0.5", "quad:-3:2", "genL:cubic_mix", "genL:tanh_quad"]:
        spec = parse_operator(text)
        assert format_operator(spec) == text
    spec = parse_operator("rotinv:zero:neg_t")
    assert format_operator(spec) == "rotinv:zero:neg_t"
    spec = parse_operator("rotinv:zero:pow(-0.3333,0.5)")
    assert spec.b_fn(4.0) == pytest.approx(-0.3333 * 2.0)
    with pytest.raises(ValueError):
        parse_operator("junk")
    with pytest.raises(ValueError):
        parse_operator("genL:nope")
