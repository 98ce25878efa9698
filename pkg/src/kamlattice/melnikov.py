"""Admissible tuples, Melnikov scans and Monte-Carlo measure estimates.

A tuple ``(j, ell, sigma)`` of order ``b`` is admissible when its monomial
conserves the modified mass and momenta:

    sum sigma_r mass(j_r) + sum(ell)       == 0
    sum sigma_r px(j_r)   + sum(ell_i m_i) == 0
    sum sigma_r py(j_r)                    == 0

with site weights ``(mass, px, py)`` equal to ``(1, m, n)`` on generic sites,
``(0, 0, n)`` on line sites, ``(0, m - m_i, n)`` on upper-arc circle sites
and ``(0, m - m_k, n)`` on lower-arc ones.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._backend import kernels
from .errors import NonGenericError, ValidationError
from .frequencies import (
    AdmissibleTuple,
    CorrectionBudget,
    DivisorDecomposition,
    FrequencyContext,
    corrected_divisor_interval,
    kf_decompose,
)
from .lattice import (
    CIRCLE_MINUS,
    CIRCLE_PLUS,
    GENERIC,
    LINE,
    TANGENTIAL,
    Site,
    SupportSet,
    _as_support,
    check_genericity,
    classify_site,
    ell_ball,
)
from .spectra import poly_P_coeffs_exact

__all__ = [
    "SiteWeights",
    "ScanBounds",
    "ScanReport",
    "MeasureResult",
    "CASE_CODES",
    "site_weights",
    "selection_residual",
    "is_admissible",
    "is_action_preserving",
    "enumerate_admissible",
    "classify_case",
    "ell_bracket",
    "large_k_skip",
    "f_min_scan",
    "melnikov_scan",
    "measure_estimate",
    "tuple_measure",
    "spectral_table",
    "default_tau",
]

# case numbering by the multiset of coarse site classes
CASE_CODES = {
    2: {"GG": 1, "GS": 2, "CG": 3, "SS": 4, "CS": 5, "CC": 6},
    3: {"GGG": 1, "GGS": 2, "CGG": 3, "GSS": 4, "CCG": 5, "CGS": 6, "SSS": 7, "CCC": 8, "CSS": 9, "CCS": 10},
}


class SiteWeights(NamedTuple):
    mass: int
    px: int
    py: int


class ScanBounds(NamedTuple):
    """Enumeration box: ``|ell|_1 <= ell_max``, ``|m| <= m_box``, ``|n| <= n_box``."""

    ell_max: int
    m_box: int
    n_box: int


def default_tau(d: int) -> float:
    return d + 2.0


def site_weights(s0, j) -> SiteWeights:
    s0 = _as_support(s0)
    m, n = int(j[0]), int(j[1])
    cls = classify_site(s0, (m, n))
    if cls.tag == GENERIC:
        return SiteWeights(1, m, n)
    if cls.tag == LINE:
        return SiteWeights(0, 0, n)
    if cls.tag == CIRCLE_PLUS:
        return SiteWeights(0, m - s0.sites[cls.i], n)
    if cls.tag == CIRCLE_MINUS:
        return SiteWeights(0, m - s0.sites[cls.k], n)
    raise ValidationError(f"tangential site {(m, n)} carries no weights")


def selection_residual(s0, tup: AdmissibleTuple) -> tuple[int, int, int]:
    """Residuals of the mass, x-momentum and y-momentum rules (all zero iff admissible)."""
    s0 = _as_support(s0)
    mass = sum(tup.ell)
    px = sum(l * m for l, m in zip(tup.ell, s0.sites))
    py = 0
    for j, g in zip(tup.sites, tup.signs):
        w = site_weights(s0, j)
        mass += g * w.mass
        px += g * w.px
        py += g * w.py
    return mass, px, py


def is_admissible(s0, tup: AdmissibleTuple) -> bool:
    return selection_residual(s0, tup) == (0, 0, 0)


def is_action_preserving(tup: AdmissibleTuple) -> bool:
    """True iff ``ell == 0`` and the signed multiplicity of every site cancels."""
    if any(tup.ell):
        return False
    count: Counter = Counter()
    for j, g in zip(tup.sites, tup.signs):
        count[j] += g
    return all(v == 0 for v in count.values())


def ell_bracket(ell: Sequence[int]) -> float:
    """``sqrt(1 + |ell|_1**2)``."""
    a = sum(abs(int(v)) for v in ell)
    return math.sqrt(1.0 + a * a)


def _box_sites(s0: SupportSet, m_box: int, n_box: int):
    generic, zero_mass = set(), {}
    weights = {}
    for m in range(-m_box, m_box + 1):
        for n in range(-n_box, n_box + 1):
            if n == 0 and s0.index(m) is not None:
                continue
            w = site_weights(s0, (m, n))
            j = Site(m, n)
            weights[j] = w
            if w.mass:
                generic.add(j)
            else:
                zero_mass.setdefault((w.px, w.py), []).append(j)
    return weights, generic, zero_mass


def enumerate_admissible(s0, b: int, ell_max: int, m_box: int, n_box: int, norm: str = "l1") -> list[AdmissibleTuple]:
    """All admissible, non action-preserving tuples of order ``b`` in the box.

    One representative per orbit of site permutations and global conjugation
    ``(sigma, ell) -> (-sigma, -ell)``; the representative is the canonical
    key order, and the result is sorted by it. The last site is solved from
    the selection rules instead of being searched.
    """
    s0 = _as_support(s0)
    if b not in (2, 3):
        raise ValidationError("order b must be 2 or 3")
    if min(m_box, n_box) < 0 or ell_max < 0:
        raise ValidationError("bounds must be nonnegative")
    rep = check_genericity(s0, 0)
    if not rep.generic:
        raise NonGenericError(f"support {s0.sites} is not generic")
    weights, generic, zero_mass = _box_sites(s0, m_box, n_box)
    entries = sorted((j, g) for j in weights for g in (1, -1))
    m_arr = np.asarray(s0.sites, dtype=np.int64)
    ells = [np.zeros(s0.d, dtype=np.int64)]
    if ell_max > 0:
        ells.extend(ell_ball(s0.d, ell_max, norm=norm))
    found: dict[tuple, AdmissibleTuple] = {}
    for ell in ells:
        eta, pi = int(ell.sum()), int(ell @ m_arr)
        ell_t = tuple(int(v) for v in ell)
        for free in itertools.combinations_with_replacement(entries, b - 1):
            r_mass, r_px, r_py = -eta, -pi, 0
            for j, g in free:
                w = weights[j]
                r_mass -= g * w.mass
                r_px -= g * w.px
                r_py -= g * w.py
            last = []
            if r_mass in (1, -1):
                j = Site(r_mass * r_px, r_mass * r_py)
                if j in generic:
                    last.append((j, r_mass))
            elif r_mass == 0:
                for g in (1, -1):
                    for j in zero_mass.get((g * r_px, g * r_py), ()):
                        last.append((j, g))
            for j, g in last:
                sites = tuple(e[0] for e in free) + (j,)
                signs = tuple(e[1] for e in free) + (g,)
                tup = AdmissibleTuple(sites, signs, ell_t)
                if is_action_preserving(tup):
                    continue
                key = tup.canonical_key()
                if key not in found:
                    pairs, kell = key
                    found[key] = AdmissibleTuple(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), kell)
    return [found[k] for k in sorted(found)]


def classify_case(s0, tup: AdmissibleTuple) -> int:
    """Case number of ``tup`` from the multiset of its site classes (G, S, C)."""
    s0 = _as_support(s0)
    kinds = "".join(sorted(classify_site(s0, j).kind for j in tup.sites))
    try:
        return CASE_CODES[len(tup.sites)][kinds]
    except KeyError:
        raise ValidationError(f"no case for site classes {kinds!r}") from None


def large_k_skip(s0: SupportSet, dec: DivisorDecomposition) -> bool:
    """True when ``|K|`` is large enough that the divisor cannot be small.

    Applies only for ``ell != 0`` with ``|K| >= max(1, 4 |ell|_1 max m_i**2)``.
    """
    if not any(dec.ell):
        return False
    bound = 4 * sum(abs(v) for v in dec.ell) * max(m * m for m in s0.sites)
    return abs(dec.K) >= max(1, bound)


# vectorized spectral data ---------------------------------------------------


def spectral_table(lam: np.ndarray) -> np.ndarray:
    """Per-sample eigenvalue table for many parameter vectors.

    Columns ``0..d-1`` hold ascending ``mu``; for the ``p``-th pair ``(i, k)``
    in lexicographic order, column ``d + 2p`` holds ``mu_plus`` and
    ``d + 2p + 1`` holds ``mu_minus``, NaN where they are complex.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    S, d = lam.shape
    root = np.sqrt(lam)
    M = 2.0 * root[:, :, None] * root[:, None, :]
    M[:, np.arange(d), np.arange(d)] = lam
    mu = np.linalg.eigvalsh(M)
    cols = [mu]
    for i, k in itertools.combinations(range(d), 2):
        a, b = lam[:, i], lam[:, k]
        rad = a * a + b * b - 14 * a * b
        with np.errstate(invalid="ignore"):
            r = np.where(rad >= 0, np.sqrt(rad), np.nan)
        cols.append(np.column_stack([(a - b - r) / 2, (a - b + r) / 2]))
    return np.column_stack(cols)


def _term_column(d: int, kind: str, i, k) -> int:
    if kind == "mu":
        return i
    p = list(itertools.combinations(range(d), 2)).index((i, k))
    return d + 2 * p + (0 if kind == "mu_plus" else 1)


def _pack(decs: Sequence[DivisorDecomposition], d: int, tau: float):
    T = len(decs)
    width = max([len(x.mu_terms) for x in decs] + [1])
    K = np.array([x.K for x in decs], dtype=float)
    ell = np.array([x.ell for x in decs], dtype=float).reshape(T, d)
    idx = -np.ones((T, width), dtype=np.int64)
    sgn = np.zeros((T, width))
    for t, x in enumerate(decs):
        for r, term in enumerate(x.mu_terms):
            idx[t, r] = _term_column(d, term.kind, term.i, term.k)
            sgn[t, r] = term.sign
    w = np.array([ell_bracket(x.ell) ** tau for x in decs], dtype=float)
    return K, ell, idx, sgn, w


def _F_grid(dec: DivisorDecomposition, lam: np.ndarray, table: np.ndarray) -> np.ndarray:
    d = lam.shape[1]
    F = -(lam @ np.asarray(dec.ell, dtype=float))
    for term in dec.mu_terms:
        F = F + term.sign * table[:, _term_column(d, term.kind, term.i, term.k)]
    return F


# F lower bounds ---------------------------------------------------------------


def _rand_fraction(rng) -> Fraction:
    return Fraction(int(rng.integers(1, 10**6)), int(rng.integers(1, 10**6)))


def _symbolic_vanishing(dec: DivisorDecomposition, d: int, trials: int = 8, seed: int = 0) -> str:
    """Decide whether ``F`` vanishes identically, for at most one eigenvalue term.

    With no eigenvalue term ``F = -lam.ell`` vanishes identically iff
    ``ell = 0``. With one term ``s * mu`` the identity ``mu = s lam.ell`` is
    tested by exact rational evaluation of the defining polynomial at random
    rational ``lam``.
    """
    mus = dec.mu_terms
    if not mus:
        return "identically-zero" if not any(dec.ell) else "not-identically-zero"
    if len(mus) > 1:
        return "unchecked"
    term = mus[0]
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        lam = [_rand_fraction(rng) for _ in range(d)]
        t = term.sign * sum(Fraction(l) * v for l, v in zip(dec.ell, lam))
        if term.kind == "mu":
            coeffs = poly_P_coeffs_exact(lam)
            val = sum(c * t**p for p, c in enumerate(coeffs))
        else:
            a, b = lam[term.i], lam[term.k]
            val = t * t - (a - b) * t + 3 * a * b
        if val != 0:
            return "not-identically-zero"
    return "identically-zero"


def f_min_scan(
    s0,
    items: Iterable,
    box: Sequence[tuple[float, float]] | None = None,
    grid: int = 20,
    ell_bound: int | None = None,
    zero_tol: float = 1e-12,
) -> dict:
    """Minimum of ``|F|`` over a parameter grid for a set of tuples.

    ``items`` may hold :class:`AdmissibleTuple` or
    :class:`DivisorDecomposition` objects. Grid points where ``F`` is complex
    are skipped and counted. A minimum below ``zero_tol`` raises a finding,
    cross-checked symbolically when ``F`` has at most one eigenvalue term.
    """
    s0 = _as_support(s0)
    d = s0.d
    box = box or [(0.5, 1.0)] * d
    axes = [np.linspace(lo, hi, grid) for lo, hi in box]
    lam = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, d)
    table = spectral_table(lam)
    best, arg, findings = math.inf, None, []
    complex_points = 0
    count = 0
    for item in items:
        dec = kf_decompose(s0, item) if isinstance(item, AdmissibleTuple) else item
        if ell_bound is not None and sum(abs(v) for v in dec.ell) > ell_bound:
            continue
        count += 1
        F = np.abs(_F_grid(dec, lam, table))
        complex_points += int(np.isnan(F).sum())
        if np.all(np.isnan(F)):
            continue
        k = int(np.nanargmin(F))
        if F[k] < best:
            best = float(F[k])
            arg = {"item": _item_dict(item), "lambda": lam[k].tolist(), "absF": best}
        if F[k] < zero_tol:
            findings.append(
                {
                    "item": _item_dict(item),
                    "lambda": lam[k].tolist(),
                    "absF": float(F[k]),
                    "symbolic": _symbolic_vanishing(dec, d),
                }
            )
    return {
        "min_absF": best if count else math.nan,
        "gamma1": best if count else math.nan,
        "argmin": arg,
        "findings": findings,
        "complex_points": complex_points,
        "evaluated": count,
    }


def _item_dict(item) -> dict:
    return item.to_dict()


# scans ------------------------------------------------------------------------


@dataclass
class ScanReport:
    config: dict
    worst: dict | None
    violations: list = field(default_factory=list)
    complex_skipped: int = 0
    skipped_large_k: int = 0
    evaluated: int = 0
    per_case_counts: dict = field(default_factory=dict)

    def violation_keys(self) -> set:
        return {
            AdmissibleTuple(v["tuple"]["sites"], v["tuple"]["signs"], v["tuple"]["ell"]).canonical_key()
            for v in self.violations
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "worst": self.worst,
            "violations": self.violations,
            "complex_skipped": self.complex_skipped,
            "skipped_large_k": self.skipped_large_k,
            "evaluated": self.evaluated,
            "per_case_counts": self.per_case_counts,
        }


def _threshold(eps, gamma, tau, ell, order, N):
    if order == 2 and N is not None:
        return eps * gamma / 2.0 * float(N) ** (-tau)
    return eps * gamma / ell_bracket(ell) ** tau


def melnikov_scan(
    ctx: FrequencyContext,
    order: int,
    gamma: float,
    tau: float | None = None,
    budget: CorrectionBudget = CorrectionBudget(),
    bounds: ScanBounds = ScanBounds(2, 4, 2),
    N: int | None = None,
    use_large_k_skip: bool = True,
    require_L: int = 0,
    workers: int = 1,
    tuples: Sequence[AdmissibleTuple] | None = None,
) -> ScanReport:
    """Check the order-2 or order-3 Melnikov conditions at fixed ``lam``.

    A tuple violates when its whole corrected divisor interval lies below
    ``eps gamma / <ell>**tau`` (or ``eps gamma / 2 N**-tau`` for order 2 with
    ``N`` given). Tuples with complex frequencies are counted, not tested.

    Parameters
    ----------
    require_L : int
        If positive, the support must be ``require_L``-generic.
    tuples : optional
        Precomputed tuples; otherwise enumerated from ``bounds``.
    """
    if order not in (2, 3):
        raise ValidationError("order must be 2 or 3")
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    s0 = ctx.s0
    tau = default_tau(s0.d) if tau is None else float(tau)
    if require_L > 0:
        rep = check_genericity(s0, require_L)
        if rep.L_generic_up_to < require_L or not rep.generic:
            raise NonGenericError(f"support is not {require_L}-generic")
    if tuples is None:
        tuples = enumerate_admissible(s0, order, *bounds)
    config = {
        "support": list(s0.sites),
        "lambda": list(ctx.lam),
        "eps": ctx.eps,
        "order": order,
        "gamma": gamma,
        "tau": tau,
        "M0": budget.M0,
        "bounds": dict(bounds._asdict()),
        "N": N,
        "use_large_k_skip": use_large_k_skip,
        "require_L": require_L,
    }

    def work(chunk):
        out = []
        for tup in chunk:
            case = classify_case(s0, tup)
            dec = kf_decompose(s0, tup)
            if use_large_k_skip and large_k_skip(s0, dec):
                out.append((case, "large_k", tup, None, None))
                continue
            iv = corrected_divisor_interval(ctx, tup, budget)
            if iv.complex_frequency:
                out.append((case, "complex", tup, None, None))
                continue
            thr = _threshold(ctx.eps, gamma, tau, tup.ell, order, N)
            out.append((case, "ok", tup, iv, thr))
        return out

    chunks = [tuples[i : i + 512] for i in range(0, len(tuples), 512)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]

    rep = ScanReport(config, None)
    cases: Counter = Counter()
    worst_scaled = math.inf
    for case, status, tup, iv, thr in itertools.chain.from_iterable(parts):
        cases[f"{order}.{case}"] += 1
        if status == "large_k":
            rep.skipped_large_k += 1
            continue
        if status == "complex":
            rep.complex_skipped += 1
            continue
        rep.evaluated += 1
        scaled = abs(iv.center) * ell_bracket(tup.ell) ** tau
        if scaled < worst_scaled:
            worst_scaled = scaled
            rep.worst = {"tuple": tup.to_dict(), "value": float(abs(iv.center)), "scaled": float(scaled)}
        if abs(iv.center) + iv.width < thr:
            rep.violations.append(
                {"tuple": tup.to_dict(), "value": float(iv.center), "width": iv.width, "threshold": thr, "case": case}
            )
    rep.per_case_counts = dict(sorted(cases.items()))
    return rep


# measure ----------------------------------------------------------------------


@dataclass
class MeasureResult:
    config: dict
    rows: list  # dicts with gamma, excluded_fraction, stderr, ci_lo, ci_hi
    n_tuples: int
    complex_tuples: int
    nsamples: int

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": self.rows,
            "n_tuples": self.n_tuples,
            "complex_tuples": self.complex_tuples,
            "nsamples": self.nsamples,
        }


def _sample_box(rng, box, count, stratified=False):
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    if stratified:
        from scipy.stats import qmc

        u = qmc.LatinHypercube(d=len(box), seed=rng).random(count)
    else:
        u = rng.random((count, len(box)))
    return lo + u * (hi - lo)


def _chunked(seed, nsamples, chunk, fn, workers):
    nchunks = -(-nsamples // chunk)
    seeds = np.random.SeedSequence(seed).spawn(nchunks)
    sizes = [min(chunk, nsamples - c * chunk) for c in range(nchunks)]
    jobs = [(np.random.default_rng(seeds[c]), sizes[c]) for c in range(nchunks)]
    if workers > 1 and nchunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: fn(*a), jobs))
    else:
        parts = [fn(*a) for a in jobs]
    return np.concatenate(parts) if parts else np.zeros(0)


def _ci(p, n, z=1.96):
    se = math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0
    return se, max(0.0, p - z * se), min(1.0, p + z * se)


def measure_estimate(
    s0,
    gamma_list: Sequence[float],
    tau: float | None = None,
    eps: float = 1e-3,
    bounds: ScanBounds = ScanBounds(2, 4, 2),
    nsamples: int = 10_000,
    seed: int = 0,
    box: Sequence[tuple[float, float]] | None = None,
    order: int = 3,
    use_large_k_skip: bool = True,
    workers: int = 1,
    chunk: int = 8192,
    tuples: Sequence[AdmissibleTuple] | None = None,
) -> MeasureResult:
    """Monte-Carlo fraction of ``lam`` failing the Melnikov conditions.

    For each sample the quantity ``min_t |K_t + eps F_t(lam)| <ell_t>**tau / eps``
    is computed once; ``lam`` is excluded at level ``gamma`` iff it is below
    ``gamma``. The excluded sets are therefore nested in ``gamma``. Tuples
    whose frequencies are complex at a sample are ignored there. Samples are
    drawn in chunks with seeds spawned from ``seed`` so that the result does
    not depend on ``workers``.
    """
    s0 = _as_support(s0)
    d = s0.d
    tau = default_tau(d) if tau is None else float(tau)
    box = [tuple(map(float, b)) for b in (box or [(0.5, 1.0)] * d)]
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if nsamples <= 0:
        raise ValidationError("nsamples must be positive")
    if tuples is None:
        tuples = enumerate_admissible(s0, order, *bounds)
    decs = [kf_decompose(s0, t) for t in tuples]
    if use_large_k_skip:
        decs = [x for x in decs if not large_k_skip(s0, x)]
    if gamma_list:
        # drop tuples that cannot reach the largest threshold anywhere in the box:
        # |F| <= |ell|_1 max(lam) + (2d + 3) max(lam) per eigenvalue term
        lam_max = max(hi for _, hi in box)
        g_max = max(gamma_list)

        def reachable(x):
            f_bound = lam_max * (sum(abs(v) for v in x.ell) + (2 * d + 3) * len(x.mu_terms))
            return (abs(x.K) - eps * f_bound) * ell_bracket(x.ell) ** tau / eps < g_max

        decs = [x for x in decs if reachable(x)]
    complex_tuples = sum(1 for x in decs if any(t.kind in ("mu_plus", "mu_minus") for t in x.mu_terms))
    packed = _pack(decs, d, tau) if decs else None

    def run(rng, count):
        lam = _sample_box(rng, box, count)
        if packed is None:
            return np.full(count, np.inf)
        return kernels.min_scaled_divisor(*packed, lam, spectral_table(lam), eps)

    margins = _chunked(seed, nsamples, chunk, run, workers)
    rows = []
    for g in gamma_list:
        p = float(np.mean(margins < g))
        se, lo, hi = _ci(p, nsamples)
        rows.append({"gamma": float(g), "excluded_fraction": p, "stderr": se, "ci_lo": lo, "ci_hi": hi})
    config = {
        "support": list(s0.sites),
        "gamma_list": [float(g) for g in gamma_list],
        "tau": tau,
        "eps": eps,
        "bounds": dict(bounds._asdict()),
        "nsamples": nsamples,
        "seed": seed,
        "box": [list(b) for b in box],
        "order": order,
        "use_large_k_skip": use_large_k_skip,
    }
    return MeasureResult(config, rows, len(decs), complex_tuples, nsamples)


def tuple_measure(
    s0,
    dec: DivisorDecomposition,
    eps: float,
    alpha: float,
    nsamples: int = 100_000,
    seed: int = 0,
    box: Sequence[tuple[float, float]] | None = None,
    stratified: bool = False,
) -> dict:
    """Empirical measure of ``{lam in box : |K + eps F(lam)| < eps alpha}``.

    Returns the box-volume-scaled fraction with its binomial standard error
    and the reference value ``16 alpha / |ell|_1``.
    """
    s0 = _as_support(s0)
    box = [tuple(map(float, b)) for b in (box or [(0.5, 1.0)] * s0.d)]
    vol = float(np.prod([hi - lo for lo, hi in box]))
    rng = np.random.default_rng(seed)
    lam = _sample_box(rng, box, nsamples, stratified=stratified)
    F = _F_grid(dec, lam, spectral_table(lam))
    hit = np.abs(dec.K + eps * F) < eps * alpha
    p = float(np.mean(hit))
    se = math.sqrt(max(p * (1 - p), 0.0) / nsamples)
    norm1 = sum(abs(v) for v in dec.ell)
    return {
        "measure": p * vol,
        "stderr": se * vol,
        "bound": 16.0 * alpha / norm1 if norm1 else math.inf,
        "fraction": p,
        "volume": vol,
    }
