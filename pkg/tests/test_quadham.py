import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kamlattice.errors import ValidationError
from kamlattice.quadham import (
    TruncatedQuadHam,
    TruncationGrid,
    bony_constant,
    bony_smoothing_check,
    bony_split,
    bracket_with_diagonal,
    majorant_norm,
    order_norm,
    poisson_bracket,
)

import oracles
from factories import random_real_ham

S0 = (-1, 3)
GRID = TruncationGrid(S0, 3, 1, 3)
BIG = TruncationGrid(S0, 6, 2, 4)
seeds = st.integers(0, 2**32 - 1)


def test_grid_basics():
    g = TruncationGrid(S0, 2, 1, 2)
    assert (-1, 0) not in g.index and (3, 0) not in g.index and (0, 0) in g.index
    assert g.size == 5 * 3 - 1  # m=3 lies outside |m| <= 2
    assert tuple(g.ells[0]) == (0, 0)
    assert all(tuple(-g.ells[i]) == tuple(g.ells[g.neg[i]]) for i in range(len(g.ells)))
    with pytest.raises(ValidationError):
        TruncationGrid(S0, 2, 1, 2, p=1.0)


def test_selection_masks_follow_rules():
    g = GRID
    okA, okB = g.allowed
    for li, ell in enumerate(g.ells):
        eta, pi = int(ell.sum()), int(ell @ np.array(S0))
        for j, sj in enumerate(g.sites):
            for k, sk in enumerate(g.sites):
                assert okA[li, j, k] == (eta == 0 and sj.n == sk.n and pi + sj.m - sk.m == 0)
                assert okB[li, j, k] == (eta == -2 and sj.n == -sk.n and pi + sj.m + sk.m == 0)


def test_keys_roundtrip():
    rng = np.random.default_rng(1)
    H = random_real_ham(GRID, rng)
    H2 = TruncatedQuadHam.from_keys(GRID, H.to_keys(), enforce_reality=False)
    np.testing.assert_array_equal(H.A, H2.A)
    np.testing.assert_array_equal(H.B, H2.B)
    with pytest.raises(ValidationError):
        TruncatedQuadHam.from_keys(GRID, {("-", (0, 0), 9, 0, 1): 1.0})
    with pytest.raises(ValidationError):
        TruncatedQuadHam.from_keys(GRID, {("*", (0, 0), 0, 0, 1): 1.0})


# norms -------------------------------------------------------------------------


def test_norm_single_entry_and_partner():
    key = ("-", (0, 0), 1, 0, 1)
    single = TruncatedQuadHam.from_keys(GRID, {key: 1.0}, enforce_reality=False)
    # the one entry maps (1,1) to (0,1): weight ratio <(0,1)>^2 / <(1,1)>^2
    assert majorant_norm(single, 0.0) == pytest.approx(2 / 3)
    paired = TruncatedQuadHam.from_keys(GRID, {key: 1.0})
    # with its conjugate partner the operator also maps (0,1) to (1,1)
    assert majorant_norm(paired, 0.0) == pytest.approx(3 / 2)


def test_norm_angle_weight_and_zero():
    key = ("-", (1, -1), 1, 0, 1)
    H = TruncatedQuadHam.from_keys(GRID, {key: 1.0}, enforce_reality=False)
    assert majorant_norm(H, 0.1) == pytest.approx(2 / 3 * math.exp(0.2))
    assert majorant_norm(TruncatedQuadHam.zeros(GRID), 1.0) == 0
    with pytest.raises(ValidationError):
        majorant_norm(H, -0.1)


@given(seeds)
@settings(max_examples=20)
def test_norm_monotone_in_s_and_inf_crosscheck(seed):
    H = random_real_ham(GRID, np.random.default_rng(seed))
    vals = [majorant_norm(H, s) for s in (0.0, 0.3, 0.7, 1.5)]
    assert vals == sorted(vals)
    # |M|_inf / sqrt(n) <= |M|_2 <= sqrt(n) |M|_inf
    M = majorant_norm(H, 0.3, ord="inf")
    r = math.sqrt(GRID.size)
    assert M / r <= vals[1] * (1 + 1e-12) and vals[1] <= r * M * (1 + 1e-12)


def test_order_norm_examples():
    rng = np.random.default_rng(3)
    H = random_real_ham(GRID, rng)
    assert order_norm(H, 0.5, (0, 0)) == pytest.approx(majorant_norm(H, 0.5))
    h = rng.uniform(0.1, 1.0, GRID.size)
    D = TruncatedQuadHam.diagonal(GRID, h)
    expected = np.max((1 + GRID.m.astype(float) ** 2) * h)
    assert order_norm(D, 0.0, (-2, 0)) == pytest.approx(expected)


@given(seeds, st.floats(0.0, 3.0))
@settings(max_examples=20)
def test_order_norm_nesting_and_monotone(seed, N):
    H = random_real_ham(GRID, np.random.default_rng(seed))
    s = 0.4
    assert order_norm(H, s, (N, N)) <= majorant_norm(H, s) * (1 + 1e-12) + 1e-15
    assert majorant_norm(H, s) <= order_norm(H, s, (-N, -N)) * (1 + 1e-12) + 1e-15
    assert order_norm(H, s, (-N, -N)) <= order_norm(H, s, (-N - 1, -N - 1)) * (1 + 1e-12) + 1e-15
    assert order_norm(H, s, (N, N), mode="sum") >= order_norm(H, s, (N, N)) * (1 - 1e-12)


# bracket --------------------------------------------------------------------------------


@given(seeds)
@settings(max_examples=10)
def test_bracket_matches_monomial_oracle(seed):
    rng = np.random.default_rng(seed)
    F = random_real_ham(GRID, rng, lmax=2)
    G = random_real_ham(GRID, rng, lmax=2)
    R = poisson_bracket(F, G)
    ref = oracles.bracket_monomials(oracles.monomials(GRID, F.A, F.B), oracles.monomials(GRID, G.A, G.B), GRID.size)
    ref = {k: v for k, v in ref.items() if k[0] in GRID.ell_index}
    got = oracles.monomials(GRID, R.A, R.B)
    for k in set(ref) | set(got):
        assert abs(ref.get(k, 0) - got.get(k, 0)) <= 1e-12


@given(seeds)
@settings(max_examples=20)
def test_bracket_algebraic_properties(seed):
    rng = np.random.default_rng(seed)
    F, G, H = (random_real_ham(GRID, rng) for _ in range(3))
    FF = poisson_bracket(F, F)
    assert FF.max_abs() <= 1e-12
    FG, GF = poisson_bracket(F, G), poisson_bracket(G, F)
    assert (FG + GF).max_abs() <= 1e-12
    lin = poisson_bracket(F * 2.0 + H, G)
    assert (lin - (FG * 2.0 + poisson_bracket(H, G))).max_abs() <= 1e-12
    assert FG.reality_defect() <= 1e-12
    assert FG.selection_defect() == 0


def test_bracket_commuting_diagonals():
    rng = np.random.default_rng(0)
    F = TruncatedQuadHam.diagonal(GRID, rng.normal(size=GRID.size))
    G = TruncatedQuadHam.diagonal(GRID, rng.normal(size=GRID.size))
    assert poisson_bracket(F, G).is_zero()


def test_bracket_with_diagonal_matches_bracket():
    rng = np.random.default_rng(5)
    G = random_real_ham(GRID, rng)
    D = rng.normal(size=GRID.size)
    R1 = bracket_with_diagonal(np.zeros(2), D, G)
    R2 = poisson_bracket(TruncatedQuadHam.diagonal(GRID, D), G)
    assert (R1 - R2).max_abs() <= 1e-12


def test_bracket_truncation_loss_reported():
    rng = np.random.default_rng(2)
    F = random_real_ham(GRID, rng)
    G = random_real_ham(GRID, rng)
    R = poisson_bracket(F, G, loss_s=0.5)
    assert R.truncation_loss > 0
    low = poisson_bracket(random_real_ham(GRID, rng, lmax=1), random_real_ham(GRID, rng, lmax=1))
    assert low.truncation_loss == 0


def test_algebra_constant_empirical():
    rng = np.random.default_rng(7)
    ratios = []
    for _ in range(100):
        F, G = random_real_ham(GRID, rng), random_real_ham(GRID, rng)
        s = 0.5
        ratios.append(majorant_norm(poisson_bracket(F, G), s) / (majorant_norm(F, s) * majorant_norm(G, s)))
    C0 = max(ratios)
    print(f"empirical algebra constant C0 = {C0:.3f}")
    assert math.isfinite(C0) and C0 < 10


# Bony split ---------------------------------------------------------------------------------


def test_bony_examples():
    assert bony_constant(S0) == pytest.approx(1 / 6)
    rng = np.random.default_rng(4)
    H = random_real_ham(BIG, rng, lmax=0)
    HB, HR = bony_split(H, 1.0, 0.5)
    assert HR.is_zero()
    far = TruncatedQuadHam.from_keys(BIG, {("-", (2, 1), 0, 0, 1): 1.0})
    HB, HR = bony_split(far)
    assert HB.is_zero() and not HR.is_zero()


@given(seeds)
@settings(max_examples=15)
def test_bony_partition_and_invariants(seed):
    H = random_real_ham(BIG, np.random.default_rng(seed))
    HB, HR = bony_split(H)
    S = HB + HR
    np.testing.assert_array_equal(S.A, H.A)
    np.testing.assert_array_equal(S.B, H.B)
    for P in (HB, HR):
        assert P.reality_defect() == 0 and P.selection_defect() == 0
    assert np.all((HB.A == 0) | (HR.A == 0))


@pytest.mark.parametrize("k", [1, 2])
def test_bony_smoothing_estimate(k):
    rng = np.random.default_rng(10 + k)
    for _ in range(10):
        H = random_real_ham(BIG, rng)
        res = bony_smoothing_check(H, 1.0, 0.6, k, N=(0.5, 1.0))
        assert res["holds"], res


def test_bony_width_validation():
    H = TruncatedQuadHam.zeros(GRID)
    with pytest.raises(ValidationError):
        bony_split(H, 0.5, 0.7)
    with pytest.raises(ValidationError):
        bony_split(H, 0.5, None)
