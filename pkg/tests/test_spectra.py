import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kamlattice.errors import ComplexSpectrumError, RepeatedEigenvalueError, ValidationError
from kamlattice.spectra import (
    DERIVED_CONE,
    NOMINAL_CONE,
    SIGMA,
    build_M,
    build_N,
    diagonalize_block,
    eigen_gap,
    find_domain_O1,
    mu_of_lambda,
    mu_pm,
    poly_P_coeffs,
    poly_P_coeffs_exact,
    reality_diagnostics,
    spectral_data,
)

pos = st.floats(0.01, 1.0, allow_nan=False)
lam_vec = st.lists(pos, min_size=1, max_size=6)


def charpoly_by_definition(lam):
    """Expand prod(t + l_i) - 2 sum_i l_i prod_{j != i}(t + l_j) with numpy polynomials."""
    P = np.polynomial.Polynomial
    full = P([1.0])
    for x in lam:
        full = full * P([x, 1.0])
    s = P([0.0])
    for i, x in enumerate(lam):
        term = P([x])
        for j, y in enumerate(lam):
            if j != i:
                term = term * P([y, 1.0])
        s = s + term
    return (full - 2 * s).coef


def test_poly_P_examples():
    np.testing.assert_allclose(poly_P_coeffs([1.0]), [-1.0, 1.0])
    np.testing.assert_allclose(poly_P_coeffs([1.0, 1.0]), [-3.0, -2.0, 1.0])


@given(lam_vec)
def test_poly_P_matches_definition(lam):
    np.testing.assert_allclose(poly_P_coeffs(lam), charpoly_by_definition(lam), atol=1e-12)


@given(lam_vec)
def test_charpoly_of_M_is_P(lam):
    # numpy.poly gives the monic characteristic polynomial, highest power first
    np.testing.assert_allclose(np.poly(build_M(lam))[::-1], poly_P_coeffs(lam), atol=1e-9)


def test_specialization_exact():
    rng = np.random.default_rng(4)
    for d in range(1, 6):
        lam = [Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50))) for _ in range(d)]
        big = poly_P_coeffs_exact(lam + [Fraction(0)])
        small = poly_P_coeffs_exact(lam)
        assert big == [Fraction(0)] + small


def test_build_M_and_N_examples():
    np.testing.assert_array_equal(build_M([1, 1]), [[1, 2], [2, 1]])
    np.testing.assert_array_equal(build_M([1, 4]), [[1, 4], [4, 4]])
    np.testing.assert_array_equal(build_N(1, 1), [[1, 2], [-2, -1]])
    N = build_N(2, 0.5)
    assert np.trace(N) == pytest.approx(1.5)
    assert np.linalg.det(N) == pytest.approx(3.0)
    np.testing.assert_allclose(np.poly(build_N(1, 1)), [1, 0, 3], atol=1e-12)
    with pytest.raises(ValidationError):
        build_M([1.0, -0.5])
    with pytest.raises(ValidationError):
        build_N(0.0, 1.0)


def test_mu_examples():
    np.testing.assert_allclose(mu_of_lambda([0.7]), [0.7])
    np.testing.assert_allclose(mu_of_lambda([1, 1]), [-1, 3], atol=1e-12)


@given(lam_vec, st.floats(0.1, 10))
def test_mu_homogeneous(lam, c):
    np.testing.assert_allclose(mu_of_lambda(np.array(lam) * c), c * mu_of_lambda(lam), rtol=1e-10, atol=1e-12)


def test_mu_pm_examples():
    p, m = mu_pm(1, 1)
    assert p == pytest.approx(-1j * math.sqrt(3))
    assert m == pytest.approx(1j * math.sqrt(3))
    p, m = mu_pm(1, 1e-12)
    assert abs(p) < 1e-10 and m == pytest.approx(1.0)


@given(pos, pos, st.floats(0.1, 10))
def test_mu_pm_vieta_and_homogeneity(a, b, c):
    p, m = mu_pm(a, b)
    assert abs(p + m - (a - b)) <= 1e-12 * max(1, a + b)
    assert abs(p * m - 3 * a * b) <= 1e-12 * max(1, a * a + b * b)
    pc, mc = mu_pm(c * a, c * b)
    assert pc == pytest.approx(c * p, rel=1e-10, abs=1e-12)
    assert mc == pytest.approx(c * m, rel=1e-10, abs=1e-12)


def test_reality_examples():
    assert not reality_diagnostics(1, 1)["real_distinct"]
    rep = reality_diagnostics(1, 0.05)
    assert rep["real_distinct"] and rep["radicand"] == pytest.approx(0.3025)
    for a, b in itertools.product(np.linspace(0.5, 1, 21), repeat=2):
        assert not reality_diagnostics(a, b)["real_distinct"]


def test_cone_constants_disagree_somewhere():
    # the radicand is a*a + b*b - 14ab; its ratio roots are 7 +- 4 sqrt 3
    for c in DERIVED_CONE:
        assert 1 + c * c - 14 * c == pytest.approx(0, abs=1e-12)
    for c in NOMINAL_CONE:
        assert abs(1 + c * c - 14 * c) > 1
    # ratio 0.1 lies between the two lower constants: the two tests disagree
    rep = reality_diagnostics(1.0, 0.1)
    assert rep["cone_conflict"] and rep["paper_cone_real"] != rep["real_distinct"]


def test_eigen_gap_examples():
    assert eigen_gap([1, 1]) == pytest.approx(4)
    assert eigen_gap([0.3]) == math.inf
    sd = spectral_data([1, 1])
    assert not sd.all_real and sd.real_pairs() == []


def test_eigen_gap_is_lipschitz_on_grid():
    rng = np.random.default_rng(2)
    for _ in range(50):
        lam = rng.uniform(0.05, 1, 3)
        h = 1e-6 * rng.normal(size=3)
        # eigenvalues of symmetric M move by at most ||dM||_2; the gap at most twice that
        assert abs(eigen_gap(lam + h) - eigen_gap(lam)) <= 2 * np.linalg.norm(build_M(lam + h) - build_M(lam), 2) + 1e-12


def test_find_domain_examples():
    assert find_domain_O1([(0.5, 1), (0.5, 1)], 20)["empty"]
    dom = find_domain_O1([(0.01, 1), (0.9, 1)], 50)
    assert not dom["empty"]
    for lam in dom["feasible_points"]:
        assert lam[0] / lam[1] < DERIVED_CONE[1]
    one = find_domain_O1([(0.2, 0.9)], 7)
    assert len(one["feasible_points"]) == 7


def test_diagonalize_type_I_examples():
    res = diagonalize_block("I", [1, 1], K=4)
    np.testing.assert_allclose(res.frequencies, [3, 7], atol=1e-12)
    res = diagonalize_block("I", [0.4], K=2)
    np.testing.assert_allclose(res.U, [[1.0]])
    assert res.frequencies == pytest.approx((2.4,))


def test_diagonalize_type_II_example():
    res = diagonalize_block("II", [1, 0.05], K=0)
    p, m = mu_pm(1, 0.05)
    assert sorted(res.eigenvalues) == pytest.approx(sorted([p.real, m.real]))
    N = build_N(1, 0.05)
    D = np.linalg.inv(res.U) @ N @ res.U
    assert np.max(np.abs(D - np.diag(res.eigenvalues))) <= 1e-10
    # frequencies follow the column order: first with +, second with -
    assert res.frequencies == pytest.approx((res.eigenvalues[0], -res.eigenvalues[1]))
    # the positive-norm column belongs to mu_minus here, so the order is swapped
    assert res.krein_swapped and res.eigenvalues == pytest.approx((m.real, p.real))


def test_diagonalize_errors():
    with pytest.raises(ComplexSpectrumError):
        diagonalize_block("II", [1, 1])
    with pytest.raises(RepeatedEigenvalueError):
        diagonalize_block("I", [1, 1, 1])  # spectrum {-1, -1, 5}
    with pytest.raises(ValidationError):
        diagonalize_block("III", [1, 1])


@given(lam_vec)
@settings(max_examples=60)
def test_type_I_orthogonal_and_invariant(lam):
    try:
        res = diagonalize_block("I", lam, K=1.5, eps=0.1)
    except RepeatedEigenvalueError:
        return
    U = res.U
    assert res.invariant_residual() <= 1e-12
    np.testing.assert_allclose(U.T @ build_M(lam) @ U, np.diag(res.eigenvalues), atol=1e-10 * max(1, max(lam)) * len(lam))
    w = np.random.default_rng(len(lam)).normal(size=len(lam))
    assert np.sum((U @ w) ** 2) == pytest.approx(np.sum(w**2), rel=1e-12)


@given(st.floats(0.5, 1.0), st.floats(0.001, 0.06))
def test_type_II_sigma_orthogonal_and_invariant(a, ratio):
    b = a * ratio
    res = diagonalize_block("II", [a, b])
    U = res.U
    assert res.invariant_residual() <= 1e-10
    assert np.all(U[0] > 0)
    w = np.array([0.3, -1.7])
    z = U @ w
    assert z[0] ** 2 - z[1] ** 2 == pytest.approx(w[0] ** 2 - w[1] ** 2, rel=1e-10, abs=1e-12)
    ev = np.sort(np.linalg.eigvals(build_N(a, b)).real)
    assert sorted(res.eigenvalues) == pytest.approx(list(ev), rel=1e-10, abs=1e-12)
    assert SIGMA.shape == (2, 2)
