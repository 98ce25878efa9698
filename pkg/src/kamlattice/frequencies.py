"""Tangential and normal frequencies and the small-divisor decomposition.

Frequencies are evaluated to first order in ``eps``::

    omega_i = m_i**2 - eps * lam_i
    Omega(j) = K_j + eps * theta_j(lam)

with integer part ``K_j`` and first-order part ``theta_j`` depending on the
class of ``j``:

=============  ====================  =============
class          K_j                   theta_j
=============  ====================  =============
generic        m**2 + n**2           0
line (i)       n**2                  mu_i
circle_plus    m**2 + n**2 - m_i**2  mu_plus_ik
circle_minus   m**2 + n**2 - m_k**2  -mu_minus_ik
=============  ====================  =============

A divisor ``omega . ell + sum_r sigma_r Omega(j_r)`` then splits exactly as
``K + eps F`` with ``K`` an integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .lattice import (
    CIRCLE_MINUS,
    CIRCLE_PLUS,
    GENERIC,
    LINE,
    TANGENTIAL,
    Site,
    SiteClass,
    SupportSet,
    _as_support,
    classify_site,
)
from .spectra import SpectralData, as_lambda, mu_pm, spectral_data

__all__ = [
    "FrequencyContext",
    "AdmissibleTuple",
    "FTerm",
    "DivisorDecomposition",
    "CorrectionBudget",
    "DivisorInterval",
    "bracket",
    "omega",
    "actions",
    "theta_value",
    "site_integer_part",
    "omega_tilde",
    "first_order_divisor",
    "kf_decompose",
    "hatF",
    "corrected_divisor_interval",
]


def bracket(x) -> float:
    """Japanese bracket ``sqrt(1 + |x|**2)`` (Euclidean norm for vectors)."""
    x = np.asarray(x, dtype=float)
    return math.sqrt(1.0 + float(np.dot(x.ravel(), x.ravel())))


@dataclass(frozen=True)
class FrequencyContext:
    s0: SupportSet
    lam: tuple[float, ...]
    eps: float
    spectral: SpectralData
    eps_star: float = math.inf

    @classmethod
    def build(cls, s0, lam, eps: float, eps_star: float = math.inf) -> "FrequencyContext":
        s0 = _as_support(s0)
        lam = as_lambda(lam)
        if lam.size != s0.d:
            raise ValidationError(f"lambda has {lam.size} entries, support has {s0.d}")
        if not (eps >= 0):
            raise ValidationError("eps must be nonnegative")
        if eps > eps_star:
            raise ValidationError(f"eps={eps} exceeds eps_star={eps_star}")
        return cls(s0, tuple(lam.tolist()), float(eps), spectral_data(lam), eps_star)

    @property
    def lam_array(self) -> np.ndarray:
        return np.asarray(self.lam)


@dataclass(frozen=True)
class AdmissibleTuple:
    """Sites ``j_r`` with signs ``sigma_r`` and a tangential mode ``ell``."""

    sites: tuple[Site, ...]
    signs: tuple[int, ...]
    ell: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(Site(int(s[0]), int(s[1])) for s in self.sites))
        object.__setattr__(self, "signs", tuple(int(g) for g in self.signs))
        object.__setattr__(self, "ell", tuple(int(v) for v in self.ell))
        if len(self.sites) != len(self.signs):
            raise ValidationError("sites and signs differ in length")
        if any(g not in (-1, 1) for g in self.signs):
            raise ValidationError("signs must be +1 or -1")

    @property
    def order(self) -> int:
        return len(self.sites)

    def conjugate(self) -> "AdmissibleTuple":
        return AdmissibleTuple(self.sites, tuple(-g for g in self.signs), tuple(-v for v in self.ell))

    def canonical_key(self) -> tuple:
        """Representative of the orbit under permutations and global conjugation."""

        def key(t):
            return (tuple(sorted(zip(t.sites, t.signs))), t.ell)

        return min(key(self), key(self.conjugate()))

    def to_dict(self) -> dict:
        return {
            "sites": [[s.m, s.n] for s in self.sites],
            "signs": list(self.signs),
            "ell": list(self.ell),
        }


@dataclass(frozen=True)
class FTerm:
    """One summand of ``F``: ``sign * value`` where value is ``lam.ell``, ``mu_i``, ``mu_plus`` or ``mu_minus``."""

    kind: str  # "ell-linear" | "mu" | "mu_plus" | "mu_minus"
    sign: int
    i: int | None = None
    k: int | None = None

    def value(self, lam: np.ndarray, spec: SpectralData, ell: Sequence[int]) -> complex:
        if self.kind == "ell-linear":
            v = float(np.dot(lam, ell))
        elif self.kind == "mu":
            v = spec.mu[self.i]
        elif self.kind == "mu_plus":
            v = spec.mu_pm[(self.i, self.k)][0]
        else:
            v = spec.mu_pm[(self.i, self.k)][1]
        return self.sign * v

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "sign": self.sign}
        if self.i is not None:
            out["i"] = self.i
        if self.k is not None:
            out["k"] = self.k
        return out


@dataclass(frozen=True)
class DivisorDecomposition:
    K: int
    ell: tuple[int, ...]
    terms: tuple[FTerm, ...] = field(default_factory=tuple)

    @property
    def mu_terms(self) -> tuple[FTerm, ...]:
        return tuple(t for t in self.terms if t.kind != "ell-linear")

    def F(self, lam, spec: SpectralData | None = None) -> complex | float:
        """Evaluate ``F`` at ``lam``; real values are returned as float."""
        lam = as_lambda(lam)
        if spec is None:
            spec = spectral_data(lam)
        val = sum((t.value(lam, spec, self.ell) for t in self.terms), 0.0)
        val = complex(val)
        return val.real if val.imag == 0 else val

    def value(self, lam, eps: float, spec: SpectralData | None = None):
        return self.K + eps * self.F(lam, spec)

    def to_dict(self) -> dict:
        return {"K": self.K, "ell": list(self.ell), "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class CorrectionBudget:
    """Uniform bound ``M0 eps**2`` on the unresolved higher-order frequency corrections."""

    M0: float = 0.0

    def __post_init__(self):
        if not (self.M0 >= 0):
            raise ValidationError("M0 must be nonnegative")

    def site_width(self, j: Site, eps: float) -> float:
        bm2 = 1.0 + j.m * j.m
        if j.n == 0:
            return self.M0 * eps**2 / math.sqrt(bm2)
        return self.M0 * eps**2 / bm2 + self.M0 * eps**2 / (bm2 + 1.0 + j.n * j.n)


@dataclass(frozen=True)
class DivisorInterval:
    center: complex | float
    width: float
    complex_frequency: bool

    @property
    def lo(self) -> float:
        return math.nan if self.complex_frequency else self.center - self.width

    @property
    def hi(self) -> float:
        return math.nan if self.complex_frequency else self.center + self.width

    def min_abs(self) -> float:
        """Smallest ``|x|`` over the interval (0 if it straddles zero)."""
        if self.complex_frequency:
            return math.nan
        return max(0.0, abs(self.center) - self.width)


def omega(ctx: FrequencyContext) -> np.ndarray:
    m = np.asarray(ctx.s0.sites, dtype=float)
    return m * m - ctx.eps * ctx.lam_array


def actions(lam, eps: float) -> np.ndarray:
    """First-order actions ``eps * lam``."""
    return eps * as_lambda(lam)


def _class(ctx_or_s0, j) -> tuple[SupportSet, SiteClass]:
    s0 = ctx_or_s0.s0 if isinstance(ctx_or_s0, FrequencyContext) else _as_support(ctx_or_s0)
    return s0, classify_site(s0, j)


def site_integer_part(s0: SupportSet, j: Site, cls: SiteClass) -> int:
    m, n = j
    if cls.tag == GENERIC:
        return m * m + n * n
    if cls.tag == LINE:
        return n * n
    if cls.tag == CIRCLE_PLUS:
        return m * m + n * n - s0.sites[cls.i] ** 2
    if cls.tag == CIRCLE_MINUS:
        return m * m + n * n - s0.sites[cls.k] ** 2
    raise ValidationError(f"tangential site {tuple(j)} has no normal frequency")


def _theta_term(cls: SiteClass) -> FTerm | None:
    if cls.tag == GENERIC:
        return None
    if cls.tag == LINE:
        return FTerm("mu", 1, cls.i)
    if cls.tag == CIRCLE_PLUS:
        return FTerm("mu_plus", 1, cls.i, cls.k)
    if cls.tag == CIRCLE_MINUS:
        return FTerm("mu_minus", -1, cls.i, cls.k)
    raise ValidationError("tangential site has no normal frequency")


def theta_value(ctx: FrequencyContext, j) -> complex | float:
    """First-order correction ``theta_j`` of the normal frequency at ``j``."""
    _, cls = _class(ctx, j)
    term = _theta_term(cls)
    if term is None:
        return 0.0
    v = complex(term.value(ctx.lam_array, ctx.spectral, ()))
    return v.real if v.imag == 0 else v


def omega_tilde(ctx: FrequencyContext, j) -> complex | float:
    """First-order normal frequency at ``j``; complex on hyperbolic circle blocks."""
    s0, cls = _class(ctx, j)
    j = Site(int(j[0]), int(j[1]))
    base = site_integer_part(s0, j, cls)
    v = complex(base + ctx.eps * complex(theta_value(ctx, j)))
    return v.real if v.imag == 0 else v


def first_order_divisor(ctx: FrequencyContext, tup: AdmissibleTuple) -> complex | float:
    """``omega . ell + sum sigma_r Omega(j_r)`` evaluated directly."""
    val = complex(float(np.dot(omega(ctx), tup.ell)))
    for j, g in zip(tup.sites, tup.signs):
        val += g * complex(omega_tilde(ctx, j))
    return val.real if val.imag == 0 else val


def kf_decompose(ctx_or_s0, tup: AdmissibleTuple) -> DivisorDecomposition:
    """Split the divisor of ``tup`` into integer ``K`` and first-order ``F``.

    ``F = -lam.ell + sum_r sigma_r theta_{j_r}``; generic sites contribute
    nothing to ``F``.
    """
    s0 = ctx_or_s0.s0 if isinstance(ctx_or_s0, FrequencyContext) else _as_support(ctx_or_s0)
    if len(tup.ell) != s0.d:
        raise ValidationError("ell has the wrong dimension")
    K = sum(l * m * m for l, m in zip(tup.ell, s0.sites))
    terms = []
    if any(tup.ell):
        terms.append(FTerm("ell-linear", -1))
    for j, g in zip(tup.sites, tup.signs):
        cls = classify_site(s0, j)
        if cls.tag == TANGENTIAL:
            raise ValidationError(f"tangential site {tuple(j)} in tuple")
        K += g * site_integer_part(s0, j, cls)
        th = _theta_term(cls)
        if th is not None:
            terms.append(FTerm(th.kind, g * th.sign, th.i, th.k))
    return DivisorDecomposition(int(K), tup.ell, tuple(terms))


def hatF(i: int, k: int | None, lam, eps: float) -> complex | float:
    """Scaled eigenvalue table: ``eps mu_i`` (k None), ``eps mu_plus_ik`` (i<k), ``eps mu_minus_ki`` (k<i), 0 (i=k)."""
    lam = as_lambda(lam)
    if not 0 <= i < lam.size or (k is not None and not 0 <= k < lam.size):
        raise ValidationError("index out of range")
    if k is None:
        from .spectra import mu_of_lambda

        return eps * float(mu_of_lambda(lam)[i])
    if i == k:
        return 0.0
    z = mu_pm(lam[i], lam[k])[0] if i < k else mu_pm(lam[k], lam[i])[1]
    z = eps * z
    return z.real if z.imag == 0 else z


def corrected_divisor_interval(
    ctx: FrequencyContext, tup: AdmissibleTuple, budget: CorrectionBudget = CorrectionBudget()
) -> DivisorInterval:
    """Interval containing the fully corrected divisor under ``budget``.

    The centre is the first-order divisor ``K + eps F``; the half-width adds
    ``M0 eps**2 / <m>**2 + M0 eps**2 / (<m>**2 + <n>**2)`` for each site with
    ``n != 0`` and ``M0 eps**2 / <m>`` for sites with ``n == 0``.
    """
    dec = kf_decompose(ctx, tup)
    F = dec.F(ctx.lam_array, ctx.spectral)
    center = dec.K + ctx.eps * F
    width = sum(budget.site_width(j, ctx.eps) for j in tup.sites)
    is_complex = isinstance(center, complex)
    return DivisorInterval(center, float(width), is_complex)
