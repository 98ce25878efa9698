import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kamlattice.errors import NonGenericError, ValidationError
from kamlattice.frequencies import (
    AdmissibleTuple,
    CorrectionBudget,
    DivisorDecomposition,
    FrequencyContext,
    FTerm,
    kf_decompose,
)
from kamlattice.lattice import check_genericity
from kamlattice.melnikov import (
    CASE_CODES,
    ScanBounds,
    classify_case,
    default_tau,
    ell_bracket,
    enumerate_admissible,
    f_min_scan,
    is_action_preserving,
    is_admissible,
    large_k_skip,
    measure_estimate,
    melnikov_scan,
    selection_residual,
    site_weights,
    spectral_table,
    tuple_measure,
)
from kamlattice.lattice import SupportSet
from kamlattice.spectra import eigen_gap, mu_of_lambda, mu_pm

import oracles

S0 = (-1, 3)


def test_site_weights_examples():
    assert site_weights(S0, (0, 1)) == (1, 0, 1)
    assert site_weights(S0, (1, 2)) == (0, 2, 2)
    assert site_weights(S0, (1, -2)) == (0, -2, -2)
    assert site_weights(S0, (-1, 4)) == (0, 0, 4)
    with pytest.raises(ValidationError):
        site_weights(S0, (3, 0))


def test_action_preserving_examples():
    j, k = (0, 1), (2, 1)
    assert is_action_preserving(AdmissibleTuple([j, j], [1, -1], [0, 0]))
    assert not is_action_preserving(AdmissibleTuple([j, k], [1, -1], [0, 0]))
    assert not is_action_preserving(AdmissibleTuple([j, j], [1, -1], [1, -1]))


def test_enumeration_example_member():
    tups = enumerate_admissible(S0, 3, 2, 3, 2)
    key = AdmissibleTuple([(0, 1), (1, 1), (2, 0)], [1, -1, -1], [0, 1]).canonical_key()
    assert key in {t.canonical_key() for t in tups}


def test_order_two_ell_zero_generic_is_empty():
    tups = enumerate_admissible(S0, 2, 0, 4, 3)
    for t in tups:
        kinds = {site_weights(S0, j).mass for j in t.sites}
        assert kinds != {1}, t


@pytest.mark.parametrize("b", [2, 3])
def test_enumeration_matches_bruteforce_box(b):
    got = {t.canonical_key() for t in enumerate_admissible(S0, b, 3, 2, 2)}
    ref = oracles.admissible_bruteforce(S0, oracles.weights_table(S0, 2, 2), b, 3)
    assert got == ref


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=3, unique=True), st.sampled_from([2, 3]))
@settings(max_examples=15)
def test_enumeration_matches_bruteforce_random_support(s, b):
    s0 = tuple(sorted(s))
    if not check_genericity(s0).generic:
        return
    got = {t.canonical_key() for t in enumerate_admissible(s0, b, 2, 3, 2)}
    assert got == oracles.admissible_bruteforce(s0, oracles.weights_table(s0, 3, 2), b, 2)


def test_enumeration_output_properties():
    tups = enumerate_admissible(S0, 3, 3, 3, 2)
    keys = [t.canonical_key() for t in tups]
    assert len(set(keys)) == len(keys) and keys == sorted(keys)
    for t in tups:
        assert selection_residual(S0, t) == (0, 0, 0)
        assert not is_action_preserving(t)
        assert sum(map(abs, t.ell)) <= 3
        assert all(abs(j.m) <= 3 and abs(j.n) <= 2 for j in t.sites)


@given(st.data())
@settings(max_examples=200)
def test_random_tuples_accepted_iff_rules_hold(data):
    weights = oracles.weights_table(S0, 3, 2)
    sites = sorted(weights)
    b = data.draw(st.sampled_from([2, 3]))
    picked = [data.draw(st.sampled_from(sites)) for _ in range(b)]
    signs = [data.draw(st.sampled_from([1, -1])) for _ in range(b)]
    ell = [data.draw(st.integers(-2, 2)) for _ in range(2)]
    mass = sum(ell) + sum(g * weights[j][0] for j, g in zip(picked, signs))
    px = ell[0] * S0[0] + ell[1] * S0[1] + sum(g * weights[j][1] for j, g in zip(picked, signs))
    py = sum(g * weights[j][2] for j, g in zip(picked, signs))
    tup = AdmissibleTuple(picked, signs, ell)
    ok = (mass, px, py) == (0, 0, 0)
    assert is_admissible(S0, tup) == ok
    if ok and not is_action_preserving(tup) and sum(map(abs, ell)) <= 2:
        keys = {t.canonical_key() for t in enumerate_admissible(S0, b, 2, 3, 2)}
        assert tup.canonical_key() in keys


def test_enumeration_errors():
    with pytest.raises(ValidationError):
        enumerate_admissible(S0, 4, 1, 1, 1)
    with pytest.raises(NonGenericError):
        enumerate_admissible((0, 1, 2), 3, 1, 2, 2)


def test_classify_case_examples():
    assert classify_case(S0, AdmissibleTuple([(0, 1), (2, 1), (0, 2)], [1, 1, 1], [0, 0])) == 1
    assert classify_case(S0, AdmissibleTuple([(0, 1), (2, 1), (-1, 2)], [1, 1, 1], [0, 0])) == 2
    assert classify_case(S0, AdmissibleTuple([(1, 2), (1, -2), (3, 1)], [1, 1, 1], [0, 0])) == 10
    assert set(CASE_CODES[3].values()) == set(range(1, 11))
    assert set(CASE_CODES[2].values()) == set(range(1, 7))


def test_large_k_skip_rule():
    s0 = SupportSet(S0)
    assert not large_k_skip(s0, DivisorDecomposition(1000, (0, 0)))
    assert large_k_skip(s0, DivisorDecomposition(36, (1, 0)))
    assert not large_k_skip(s0, DivisorDecomposition(35, (1, 0)))


def test_spectral_table_matches_scalar_code():
    lam = np.array([[0.6, 0.9], [1.0, 0.05], [0.3, 0.01]])
    tab = spectral_table(lam)
    for row, l in zip(tab, lam):
        np.testing.assert_allclose(row[:2], mu_of_lambda(l), atol=1e-12)
        p, m = mu_pm(*l)
        if p.imag == 0:
            np.testing.assert_allclose(row[2:], [p.real, m.real], atol=1e-12)
        else:
            assert np.isnan(row[2:]).all()


# F lower bounds --------------------------------------------------------------


def test_fmin_eigen_difference_bounded_by_gap():
    dec = DivisorDecomposition(0, (0, 0), (FTerm("mu", 1, 1), FTerm("mu", -1, 0)))
    box = [(0.5, 1.0), (0.5, 1.0)]
    res = f_min_scan(S0, [dec], box=box, grid=15)
    axes = np.linspace(0.5, 1, 15)
    gaps = [eigen_gap([a, b]) for a in axes for b in axes]
    assert res["min_absF"] >= min(gaps) - 1e-12


def test_fmin_linear():
    dec = DivisorDecomposition(0, (1, 2), (FTerm("ell-linear", -1),))
    res = f_min_scan(S0, [dec], grid=11)
    assert res["min_absF"] == pytest.approx(1.5)
    assert not res["findings"]


def test_fmin_flags_zero_and_checks_symbolically():
    zero = DivisorDecomposition(0, (0, 0), ())
    res = f_min_scan(S0, [zero], grid=5)
    assert res["min_absF"] == 0 and res["findings"][0]["symbolic"] == "identically-zero"
    # with one tangential mode mu_1 = lam_1, so -lam_1 + mu_1 vanishes identically
    ident = DivisorDecomposition(0, (1,), (FTerm("ell-linear", -1), FTerm("mu", 1, 0)))
    res = f_min_scan((2,), [ident], grid=5)
    assert res["findings"][0]["symbolic"] == "identically-zero"
    # mu_2 - lam_1 - lam_2 has a grid zero-free minimum but is checked as nonzero
    other = DivisorDecomposition(0, (1, 1), (FTerm("ell-linear", -1), FTerm("mu", 1, 1)))
    res = f_min_scan(S0, [other], grid=9, zero_tol=10.0)
    assert res["findings"][0]["symbolic"] == "not-identically-zero"


# scans ----------------------------------------------------------------------------


def test_scan_nonzero_K_never_violates():
    ctx = FrequencyContext.build(S0, [0.7, 0.9], 1e-3)
    rep = melnikov_scan(ctx, 3, 0.1, budget=CorrectionBudget(1.0), bounds=ScanBounds(2, 3, 2), use_large_k_skip=False)
    tups = {tuple(map(tuple, (v["tuple"]["sites"], v["tuple"]["signs"], v["tuple"]["ell"]))): v for v in rep.violations}
    for v in tups.values():
        t = AdmissibleTuple(v["tuple"]["sites"], v["tuple"]["signs"], v["tuple"]["ell"])
        assert kf_decompose(S0, t).K == 0


def test_scan_gamma_zero():
    ctx = FrequencyContext.build(S0, [1.0, 0.05], 1e-3)
    assert melnikov_scan(ctx, 3, 0.0, bounds=ScanBounds(2, 3, 2)).violations == []


def test_scan_manufactured_resonance():
    lam = [0.6, 0.9]
    tups = enumerate_admissible(S0, 3, 2, 3, 2)
    for t in tups:
        dec = kf_decompose(S0, t)
        F = dec.F(lam)
        if dec.K != 0 and not dec.mu_terms and F != 0 and -dec.K / F > 0:
            break
    eps = -dec.K / F
    ctx = FrequencyContext.build(S0, lam, eps)
    rep = melnikov_scan(ctx, 3, 0.1, tuples=[t], use_large_k_skip=False)
    assert len(rep.violations) == 1 and abs(rep.violations[0]["value"]) < 1e-9


def test_scan_small_eps_limit_matches_direct_evaluation():
    lam = [1.0, 0.05]
    eps = 1e-9
    tau = default_tau(2)
    tups = enumerate_admissible(S0, 3, 2, 3, 2)
    ctx = FrequencyContext.build(S0, lam, eps)
    scaled = []
    for t in tups:
        dec = kf_decompose(S0, t)
        F = dec.F(lam)
        if dec.K == 0 and not isinstance(F, complex):
            scaled.append(abs(F) * ell_bracket(t.ell) ** tau)
    gamma = float(np.median(scaled))
    rep = melnikov_scan(ctx, 3, gamma, tau=tau, tuples=tups, use_large_k_skip=False)
    expected = set()
    for t in tups:
        dec = kf_decompose(S0, t)
        F = dec.F(lam)
        if dec.K == 0 and not isinstance(F, complex) and abs(F) < gamma / ell_bracket(t.ell) ** tau:
            expected.add(t.canonical_key())
    got = {AdmissibleTuple(v["tuple"]["sites"], v["tuple"]["signs"], v["tuple"]["ell"]).canonical_key()
           for v in rep.violations}
    assert got == expected and expected


def test_large_k_skip_does_not_change_violations():
    ctx = FrequencyContext.build(S0, [1.0, 0.05], 0.05)
    kw = dict(bounds=ScanBounds(3, 4, 2), budget=CorrectionBudget(0.5))
    a = melnikov_scan(ctx, 3, 50.0, use_large_k_skip=True, **kw)
    b = melnikov_scan(ctx, 3, 50.0, use_large_k_skip=False, **kw)
    assert a.violation_keys() == b.violation_keys() and a.violations
    assert a.skipped_large_k > 0 and b.skipped_large_k == 0


def test_scan_order_two_threshold_with_N():
    ctx = FrequencyContext.build(S0, [1.0, 0.05], 1e-3)
    rep = melnikov_scan(ctx, 2, 0.1, bounds=ScanBounds(2, 3, 2), N=4)
    assert rep.config["N"] == 4 and sum(rep.per_case_counts.values()) > 0
    for v in rep.violations:
        assert v["threshold"] == pytest.approx(1e-3 * 0.1 / 2 * 4 ** -default_tau(2))


def test_scan_workers_do_not_change_result():
    ctx = FrequencyContext.build(S0, [1.0, 0.05], 0.05)
    a = melnikov_scan(ctx, 3, 50.0, bounds=ScanBounds(2, 3, 2), workers=1)
    b = melnikov_scan(ctx, 3, 50.0, bounds=ScanBounds(2, 3, 2), workers=3)
    assert a.to_dict() == b.to_dict()


def test_scan_require_L():
    ctx = FrequencyContext.build(S0, [0.7, 0.9], 1e-3)
    with pytest.raises(NonGenericError):
        melnikov_scan(ctx, 3, 0.1, bounds=ScanBounds(1, 2, 1), require_L=5)


# measure ------------------------------------------------------------------------------


def test_measure_monotone_and_deterministic():
    kw = dict(tau=4, eps=1e-3, bounds=ScanBounds(4, 5, 2), nsamples=30000, seed=3)
    gam = [0.005, 0.01, 0.02, 0.04]
    a = measure_estimate(S0, gam, **kw)
    fr = [r["excluded_fraction"] for r in a.rows]
    assert fr == sorted(fr) and fr[-1] > 0
    b = measure_estimate(S0, gam, workers=4, chunk=4096, **kw)
    c = measure_estimate(S0, gam, workers=1, chunk=4096, **kw)
    assert b.to_dict() == c.to_dict()
    assert measure_estimate(S0, gam, **kw).to_dict() == a.to_dict()


def test_measure_prefilter_is_exact():
    # dropping unreachable tuples must not change any margin below gamma_max
    tups = enumerate_admissible(S0, 3, 3, 4, 2)
    kw = dict(tau=4, eps=1e-3, nsamples=20000, seed=9, tuples=tups)
    full = measure_estimate(S0, [0.01, 0.04], **kw)
    big = measure_estimate(S0, [0.01, 0.04, 1e9], **kw)
    assert [r["excluded_fraction"] for r in full.rows] == [r["excluded_fraction"] for r in big.rows[:2]]
    assert big.n_tuples >= full.n_tuples


def test_tuple_measure_bound_and_stratified():
    dec = DivisorDecomposition(3, (20, -20), (FTerm("ell-linear", -1),))
    plain = tuple_measure(S0, dec, 1e-3, 0.5, nsamples=40000, seed=1)
    strat = tuple_measure(S0, dec, 1e-3, 0.5, nsamples=40000, seed=1, stratified=True)
    assert plain["bound"] == pytest.approx(16 * 0.5 / 40)
    assert plain["measure"] <= plain["bound"] + 3 * plain["stderr"]
    assert abs(plain["measure"] - strat["measure"]) <= 4 * plain["stderr"] + 1e-12
