import numpy as np
import pytest

from conedeg.matcone import (
    ConeClass,
    ConeSpec,
    Spectrum,
    SymMatrix,
    axiom_check,
    classify,
    cone_margin,
    eigen_full,
    eigen_sym,
    format_cone,
    in_cone,
    parse_cone,
    sigma_all,
    sigma_k,
    sigma_k_bruteforce,
)


# ---------------------------------------------------------------------------
# SymMatrix / Spectrum plumbing


def test_symmatrix_roundtrip():
    rng = np.random.default_rng(7)
    for n in (2, 3, 5, 16):
        m = rng.normal(size=(n, n))
        m = m + m.T
        sm = SymMatrix.from_dense(m)
        assert sm.tri.shape == (n * (n + 1) // 2,)
        np.testing.assert_allclose(sm.dense(), m, atol=1e-15)
        assert sm.trace() == pytest.approx(np.trace(m), rel=1e-14)


def test_symmatrix_rejects_bad_input():
    with pytest.raises(ValueError):
        SymMatrix.from_dense(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        SymMatrix.from_dense(np.eye(17))
    with pytest.raises(ValueError):
        SymMatrix.from_dense(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    # 1x1 is allowed: it carries the scalar case of the grid checks
    assert SymMatrix.from_dense(np.array([[2.0]])).trace() == 2.0


def test_symmatrix_arithmetic():
    a = SymMatrix.eye(3, 2.0)
    b = SymMatrix.outer(np.array([1.0, 0.0, -1.0]))
    np.testing.assert_allclose((a + b).dense(), 2 * np.eye(3) + np.outer([1, 0, -1], [1, 0, -1]))
    np.testing.assert_allclose((a - b).scale(0.5).dense(), np.eye(3) - 0.5 * np.outer([1, 0, -1], [1, 0, -1]))


def test_spectrum_sorts():
    s = Spectrum(np.array([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(s.values, [-1.0, 2.0, 3.0])
    assert s.min() == -1.0 and s.max() == 3.0 and s.n == 3


# ---------------------------------------------------------------------------
# sigma_k: frozen cases, then the brute-force oracle


def test_sigma_k_frozen():
    assert sigma_k(np.array([1.0, 2.0, 3.0]), 1) == 6.0
    assert sigma_k(np.array([1.0, 2.0, 3.0]), 2) == 11.0
    assert sigma_k(np.array([1.0, 1.0, 1.0]), 3) == 1.0


def test_sigma_k_range_errors():
    with pytest.raises(ValueError):
        sigma_k(np.array([1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        sigma_k(np.array([1.0, 2.0]), -1)


def test_sigma_k_matches_bruteforce():
    rng = np.random.default_rng(11)
    for n in range(2, 9):
        for _ in range(20):
            lam = rng.normal(scale=3.0, size=n)
            for k in range(0, n + 1):
                ref = sigma_k_bruteforce(lam, k)
                got = sigma_k(lam, k)
                assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_sigma_all_consistent():
    lam = np.array([2.0, -1.0, 0.5, 4.0])
    e = sigma_all(lam)
    assert e[0] == 1.0
    for k in range(5):
        assert e[k] == pytest.approx(sigma_k(lam, k), rel=1e-14)


# ---------------------------------------------------------------------------
# eigen_sym: trivial cases, planted spectra against the numpy oracle


def test_eigen_diagonal():
    s = eigen_sym(SymMatrix.from_dense(np.diag([3.0, 1.0, 2.0])))
    np.testing.assert_allclose(s.values, [1.0, 2.0, 3.0], atol=1e-14)


def test_eigen_offdiag_pair():
    s = eigen_sym(SymMatrix.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]])))
    np.testing.assert_allclose(s.values, [-1.0, 1.0], atol=1e-14)


def test_eigen_planted_spectrum():
    rng = np.random.default_rng(23)
    for n in (2, 3, 6, 10, 16):
        planted = np.sort(rng.normal(scale=5.0, size=n))
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        m = SymMatrix.from_dense(q @ np.diag(planted) @ q.T)
        s = eigen_sym(m)
        np.testing.assert_allclose(s.values, planted, atol=1e-10 * (1 + np.abs(planted).max()))


def test_eigen_matches_numpy_oracle():
    rng = np.random.default_rng(31)
    for n in (2, 4, 8, 16):
        for _ in range(5):
            a = rng.normal(size=(n, n))
            m = SymMatrix.from_dense(a + a.T)
            ref = np.linalg.eigh(m.dense())[0]
            got = eigen_sym(m).values
            np.testing.assert_allclose(got, ref, atol=1e-10 * (1 + np.abs(ref).max()))


def test_eigen_reconstruction_residual():
    rng = np.random.default_rng(39)
    for n in (3, 8, 16):
        a = rng.normal(size=(n, n))
        m = SymMatrix.from_dense(a + a.T)
        spec, q = eigen_full(m)
        resid = np.linalg.norm(q @ np.diag(spec.values) @ q.T - m.dense())
        assert resid <= 1e-12 * (1.0 + m.frob())


def test_eigen_conjugation_invariance():
    rng = np.random.default_rng(47)
    a = rng.normal(size=(5, 5))
    m = a + a.T
    base = eigen_sym(SymMatrix.from_dense(m)).values
    for _ in range(10):
        q, r = np.linalg.qr(rng.normal(size=(5, 5)))
        q = q * np.sign(np.diag(r))
        rot = eigen_sym(SymMatrix.from_dense(q @ m @ q.T)).values
        np.testing.assert_allclose(rot, base, atol=1e-10)


# ---------------------------------------------------------------------------
# cone membership


def test_in_cone_frozen():
    assert in_cone(np.array([1.0, 1.0, 1.0]), ConeSpec.gamma(3))
    # sigma_2(2,2,-1) = 4 - 2 - 2 = 0: boundary, so not in the open cone
    assert not in_cone(np.array([2.0, 2.0, -1.0]), ConeSpec.gamma(2))
    assert in_cone(np.array([-1.0, -1.0, 5.0]), ConeSpec.gamma(1))


def test_in_cone_kinds():
    lam = np.array([0.5, 1.0, 2.0])
    assert in_cone(lam, ConeSpec.posdef())
    assert in_cone(lam, ConeSpec.trace())
    assert in_cone(lam, ConeSpec.one_pos())
    assert not in_cone(-lam, ConeSpec.posdef())
    assert in_cone(-lam, ConeSpec.negated(ConeSpec.posdef()))
    # one negative eigenvalue defeats posdef but not one_pos
    assert in_cone(np.array([-3.0, 1.0, 1.0]), ConeSpec.one_pos())
    assert not in_cone(np.array([-3.0, -1.0, -1.0]), ConeSpec.one_pos())


def test_neg_gamma_complement_equals_one_pos_at_k_n():
    # for k = n the complement of the negated closed positive cone is exactly
    # "at least one positive eigenvalue"
    rng = np.random.default_rng(3)
    spec_c = ConeSpec.neg_gamma_complement(3)
    spec_p = ConeSpec.one_pos()
    for _ in range(200):
        lam = rng.normal(scale=2.0, size=3)
        if np.min(np.abs(lam)) < 1e-6:
            continue
        assert in_cone(lam, spec_c) == in_cone(lam, spec_p)


def test_gamma_nesting():
    rng = np.random.default_rng(5)
    for _ in range(200):
        lam = rng.normal(scale=2.0, size=4)
        for k in range(2, 5):
            if in_cone(lam, ConeSpec.gamma(k)):
                for j in range(1, k):
                    assert in_cone(lam, ConeSpec.gamma(j))


def test_gamma_monotonicity():
    rng = np.random.default_rng(13)
    for _ in range(200):
        lam = rng.normal(scale=2.0, size=4)
        for k in (1, 2, 3, 4):
            if in_cone(lam, ConeSpec.gamma(k)):
                mu = lam + rng.uniform(0.0, 2.0, size=4)
                assert in_cone(mu, ConeSpec.gamma(k))


def test_gamma_segment_connectivity():
    # the sigma_j > 0 characterization: sampled members connect to the
    # all-ones vector along a straight segment without leaving the set
    rng = np.random.default_rng(17)
    ones = np.ones(3)
    for k in (1, 2, 3):
        spec = ConeSpec.gamma(k)
        found = 0
        for _ in range(500):
            lam = rng.normal(scale=2.0, size=3)
            if not in_cone(lam, spec):
                continue
            found += 1
            for t in np.linspace(0.0, 1.0, 21):
                assert in_cone((1 - t) * lam + t * ones, spec)
        assert found > 20


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        in_cone(np.array([1.0, 1.0]), ConeSpec.gamma(2, n=3))
    with pytest.raises(ValueError):
        ConeSpec.gamma(4, n=3)


# ---------------------------------------------------------------------------
# classify


def test_classify_frozen():
    for k in (1, 2, 3):
        verdict, margin = classify(SymMatrix.from_dense(np.zeros((3, 3))), ConeSpec.gamma(k), tol=1e-9)
        assert verdict is ConeClass.BOUNDARY
        assert margin == pytest.approx(0.0, abs=1e-12)
    verdict, _ = classify(SymMatrix.eye(3), ConeSpec.posdef(), tol=1e-9)
    assert verdict is ConeClass.INTERIOR
    verdict, margin = classify(SymMatrix.eye(3, -1.0), ConeSpec.trace(), tol=1e-9)
    assert verdict is ConeClass.OUTSIDE
    assert margin == pytest.approx(-3.0, abs=1e-12)


def test_classify_scale_invariant_verdict():
    rng = np.random.default_rng(29)
    specs = [ConeSpec.gamma(2), ConeSpec.posdef(), ConeSpec.trace(), ConeSpec.one_pos()]
    for _ in range(50):
        a = rng.normal(size=(3, 3))
        m = SymMatrix.from_dense(a + a.T)
        for spec in specs:
            v0, m0 = classify(m, spec, tol=1e-12)
            if v0 is ConeClass.BOUNDARY or abs(m0) < 1e-6:
                continue  # scaling can cross the tol band right at the edge
            for c in (0.5, 2.0, 7.3):
                v1, _ = classify(m.scale(c), spec, tol=1e-12)
                assert v1 is v0


def test_classify_verdict_never_drops_when_adding_posdef():
    # degenerate ellipticity at the cone level: adding B > 0 cannot move the
    # verdict down the Outside < Boundary < Interior order
    rng = np.random.default_rng(41)
    order = {ConeClass.OUTSIDE: 0, ConeClass.BOUNDARY: 1, ConeClass.INTERIOR: 2}
    specs = [ConeSpec.gamma(2), ConeSpec.posdef(), ConeSpec.trace(), ConeSpec.one_pos(),
             ConeSpec.neg_gamma_complement(2)]
    for _ in range(50):
        a = rng.normal(size=(3, 3))
        m = SymMatrix.from_dense(a + a.T)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        b = SymMatrix.from_dense(q @ np.diag(rng.uniform(0.1, 2.0, size=3)) @ q.T)
        for spec in specs:
            v0, _ = classify(m, spec, tol=1e-9)
            v1, _ = classify(m + b, spec, tol=1e-9)
            assert order[v1] >= order[v0]


# ---------------------------------------------------------------------------
# axiom_check


def test_axiom_gamma2_all_pass():
    report = axiom_check(ConeSpec.gamma(2, n=3), samples=200, seed=0)
    assert report.ok()
    for name, (flag, witness) in report.results.items():
        assert flag, name
        assert witness is None


def test_axiom_one_pos_trace_fails():
    report = axiom_check(ConeSpec.one_pos(n=3), samples=300, seed=1)
    assert report.results["add_posdef"][0]
    ok, witness = report.results["trace_positive"]
    assert not ok
    lam = np.array(witness["lam"])
    assert in_cone(lam, ConeSpec.one_pos()) and lam.sum() <= 0.0


def test_axiom_trace_cone_all_pass():
    report = axiom_check(ConeSpec.trace(n=3), samples=200, seed=2)
    assert report.ok()


def test_axiom_neg_gamma_complement_trace_fails():
    # for 1 < k < n the set leaks into tr <= 0: e.g. (-1,-1,5) negated is
    # (1,1,-5), sigma_2(1,1,-5) = 1-5-5 < 0, so (-1,-1,5)-like points with
    # trace pushed negative stay inside
    report = axiom_check(ConeSpec.neg_gamma_complement(2, n=3), samples=300, seed=3)
    assert report.results["add_posdef"][0]
    assert report.results["scale_pos"][0]
    ok, witness = report.results["trace_positive"]
    assert not ok
    lam = np.array(witness["lam"])
    assert in_cone(lam, ConeSpec.neg_gamma_complement(2)) and lam.sum() <= 0.0


def test_axiom_check_rejects_zero_samples():
    with pytest.raises(ValueError):
        axiom_check(ConeSpec.posdef(), samples=0)


# ---------------------------------------------------------------------------
# textual forms


def test_cone_text_roundtrip():
    for text in ["posdef", "one_pos", "trace", "gamma_k:2", "neg_gamma_c:3", "neg:gamma_k:1", "neg:posdef"]:
        assert format_cone(parse_cone(text)) == text
    with pytest.raises(ValueError):
        parse_cone("garbage")


def test_margin_matches_kind():
    lam = np.array([-0.5, 1.0, 2.0])
    assert cone_margin(lam, ConeSpec.posdef()) == pytest.approx(-0.5)
    assert cone_margin(lam, ConeSpec.trace()) == pytest.approx(2.5)
    assert cone_margin(lam, ConeSpec.one_pos()) == pytest.approx(2.0)
