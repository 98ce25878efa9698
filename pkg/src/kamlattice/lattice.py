"""Integer geometry of tangential support sets.

A support set is an increasing tuple of integers ``m_1 < ... < m_d``;
the tangential sites are ``(m_i, 0)``. Everything here is exact integer
arithmetic. Indices into the support are 0-based throughout.

Two families of lattice sites interact resonantly with the support:

* horizontal lines: ``(m_i, n)`` with ``n != 0``;
* circles: for ``i < k``, the integer points with ``n != 0`` on the circle
  with diameter ``(m_i, 0)``--``(m_k, 0)``, i.e.
  ``(m - m_i)(m - m_k) + n**2 == 0``. Points with ``n > 0`` form the upper
  arc, ``n < 0`` the lower arc, and ``(m, n) -> (m_i + m_k - m, -n)`` swaps
  them.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from ._backend import kernels
from .errors import (
    AmbiguousClassError,
    IntractableError,
    NonGenericError,
    ValidationError,
)

__all__ = [
    "Site",
    "SupportSet",
    "SiteClass",
    "Violation",
    "GenericityReport",
    "DensityResult",
    "ResonantMonomial",
    "TANGENTIAL",
    "LINE",
    "CIRCLE_PLUS",
    "CIRCLE_MINUS",
    "GENERIC",
    "circle_integer_points",
    "circle_loci",
    "classify_site",
    "check_genericity",
    "ell_ball",
    "density_experiment",
    "is_rectangle",
    "enumerate_birkhoff_resonant",
]

TANGENTIAL = "tangential"
LINE = "line"
CIRCLE_PLUS = "circle_plus"
CIRCLE_MINUS = "circle_minus"
GENERIC = "generic"

EXHAUSTIVE_LIMIT = 2_000_000


class Site(NamedTuple):
    """Lattice site ``(m, n)`` in Z^2."""

    m: int
    n: int


@dataclass(frozen=True)
class SupportSet:
    """Strictly increasing tuple of tangential x-modes."""

    sites: tuple[int, ...]

    def __post_init__(self):
        try:
            vals = tuple(int(v) for v in self.sites)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"support must be integers: {self.sites!r}") from exc
        if any(int(v) != v for v in self.sites):
            raise ValidationError(f"support must be integers: {self.sites!r}")
        if len(vals) < 1:
            raise ValidationError("support must contain at least one site")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValidationError(f"support must be strictly increasing: {vals}")
        object.__setattr__(self, "sites", vals)

    @classmethod
    def parse(cls, text: str) -> "SupportSet":
        """Build from a comma separated string such as ``"-1,3"``."""
        try:
            vals = [int(tok) for tok in text.split(",") if tok.strip()]
        except ValueError as exc:
            raise ValidationError(f"cannot parse support {text!r}") from exc
        return cls(tuple(vals))

    @property
    def d(self) -> int:
        return len(self.sites)

    @property
    def max_abs(self) -> int:
        return max(abs(v) for v in self.sites)

    def index(self, m: int) -> int | None:
        try:
            return self.sites.index(m)
        except ValueError:
            return None

    def __iter__(self):
        return iter(self.sites)

    def __len__(self):
        return len(self.sites)

    def __getitem__(self, i):
        return self.sites[i]


def _as_support(s0) -> SupportSet:
    return s0 if isinstance(s0, SupportSet) else SupportSet(tuple(s0))


@dataclass(frozen=True)
class SiteClass:
    """Resonance class of a lattice site.

    ``tag`` is one of the module constants. ``i`` is the support index for
    tangential and line sites and the first circle index for circle sites;
    ``k`` is the second circle index. ``partner`` is the opposite circle
    vertex ``(m_i + m_k - m, -n)``.
    """

    tag: str
    i: int | None = None
    k: int | None = None
    partner: Site | None = None

    @property
    def kind(self) -> str:
        """Coarse label: ``"G"`` generic, ``"S"`` line, ``"C"`` circle, ``"T"`` tangential."""
        return {
            GENERIC: "G",
            LINE: "S",
            CIRCLE_PLUS: "C",
            CIRCLE_MINUS: "C",
            TANGENTIAL: "T",
        }[self.tag]


@dataclass(frozen=True)
class Violation:
    kind: str  # "SC-intersection" | "CC-intersection" | "momentum-combination"
    witness: tuple

    def to_dict(self) -> dict:
        return {"kind": self.kind, "witness": list(self.witness)}


@dataclass(frozen=True)
class GenericityReport:
    generic: bool
    L_generic_up_to: int
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "generic": self.generic,
            "L_generic_up_to": self.L_generic_up_to,
            "violations": [v.to_dict() for v in self.violations],
        }


# circles ------------------------------------------------------------------


def circle_integer_points(s0, i: int, k: int) -> list[Site]:
    """Integer points with ``n != 0`` on the circle over ``m_i, m_k``.

    Uses ``(2m - m_i - m_k)**2 + (2n)**2 == (m_i - m_k)**2``; only
    ``m`` between the two diameter endpoints can contribute. Result is
    sorted by ``(m, n)``.
    """
    s0 = _as_support(s0)
    if not (0 <= i < k < s0.d):
        raise ValidationError(f"need 0 <= i < k < d, got i={i}, k={k}, d={s0.d}")
    return list(_circle_points(s0.sites[i], s0.sites[k]))


@lru_cache(maxsize=4096)
def _circle_points(mi: int, mk: int) -> tuple[Site, ...]:
    lo, hi = min(mi, mk), max(mi, mk)
    diam2 = (mi - mk) ** 2
    pts = []
    for m in range(lo, hi + 1):
        rest = diam2 - (2 * m - mi - mk) ** 2
        if rest <= 0 or rest % 4:
            continue
        n = math.isqrt(rest // 4)
        if n * n * 4 == rest:
            pts.append(Site(m, -n))
            pts.append(Site(m, n))
    return tuple(sorted(pts))


def circle_loci(s0) -> dict[tuple[int, int], list[Site]]:
    """All circle point lists keyed by index pair ``(i, k)``, ``i < k``."""
    s0 = _as_support(s0)
    return {
        (i, k): list(_circle_points(s0.sites[i], s0.sites[k]))
        for i, k in itertools.combinations(range(s0.d), 2)
    }


def _classes_of(s0: SupportSet, m: int, n: int) -> list[SiteClass]:
    out = []
    idx = s0.index(m)
    if idx is not None:
        out.append(SiteClass(TANGENTIAL if n == 0 else LINE, i=idx))
    if n != 0:
        for i, k in itertools.combinations(range(s0.d), 2):
            mi, mk = s0.sites[i], s0.sites[k]
            if (m - mi) * (m - mk) + n * n == 0:
                tag = CIRCLE_PLUS if n > 0 else CIRCLE_MINUS
                out.append(SiteClass(tag, i=i, k=k, partner=Site(mi + mk - m, -n)))
    return out


def classify_site(s0, j) -> SiteClass:
    """Classify ``j`` as tangential, line, upper/lower circle or generic.

    Raises
    ------
    AmbiguousClassError
        When ``j`` lies on several loci, which only happens for non-generic
        supports.
    """
    s0 = _as_support(s0)
    m, n = int(j[0]), int(j[1])
    found = _classes_of(s0, m, n)
    if not found:
        return SiteClass(GENERIC)
    if len(found) > 1:
        raise AmbiguousClassError(Site(m, n), [c.tag for c in found])
    return found[0]


# genericity ---------------------------------------------------------------


def ell_ball(d: int, L: int, norm: str = "l1", half: bool = False) -> np.ndarray:
    """Nonzero integer vectors with ``|ell| <= L``.

    Parameters
    ----------
    norm : {"l1", "linf"}
    half : bool
        Keep one representative of each ``{ell, -ell}`` pair (first nonzero
        entry positive).

    Returns
    -------
    ndarray of shape (count, d), int64, in lexicographic order.
    """
    if L < 0:
        raise ValidationError("L must be nonnegative")
    if norm not in ("l1", "linf"):
        raise ValidationError(f"unknown norm {norm!r}")
    if norm == "linf":
        rng = np.arange(-L, L + 1, dtype=np.int64)
        grid = np.array(np.meshgrid(*([rng] * d), indexing="ij")).reshape(d, -1).T
    else:
        rows: list[tuple[int, ...]] = [()]
        budget = [L]
        for _ in range(d):
            new_rows, new_budget = [], []
            for row, b in zip(rows, budget):
                for v in range(-b, b + 1):
                    new_rows.append(row + (v,))
                    new_budget.append(b - abs(v))
            rows, budget = new_rows, new_budget
        grid = np.array(rows, dtype=np.int64).reshape(-1, d)
    grid = grid[np.any(grid != 0, axis=1)]
    if half:
        first = grid[np.arange(len(grid)), np.argmax(grid != 0, axis=1)]
        grid = grid[first > 0]
    return np.ascontiguousarray(grid)


def check_genericity(s0, L: int = 0, norm: str = "l1") -> GenericityReport:
    """Check the line/circle disjointness and the momentum condition.

    The support is generic when no circle point lies on a horizontal line
    and no two distinct circles share a point. It is ``L``-generic when in
    addition ``sum(ell_i m_i) != 0`` for every ``0 < |ell| <= L``. Every
    violation is reported; momentum witnesses are given up to sign.
    """
    s0 = _as_support(s0)
    if L < 0:
        raise ValidationError("L must be nonnegative")
    violations: list[Violation] = []
    owners: dict[Site, list[tuple[int, int]]] = {}
    support = set(s0.sites)
    for (i, k), pts in circle_loci(s0).items():
        for p in pts:
            owners.setdefault(p, []).append((i, k))
            if p.m in support:
                violations.append(Violation("SC-intersection", (p.m, p.n)))
    for p in sorted(owners):
        if len(owners[p]) > 1:
            violations.append(Violation("CC-intersection", (p.m, p.n)))
    generic = not violations

    L_ok = L
    if L > 0:
        ells = ell_ball(s0.d, L, norm=norm, half=True)
        dots = ells @ np.asarray(s0.sites, dtype=np.int64)
        bad = ells[dots == 0]
        if len(bad):
            sizes = np.abs(bad).sum(axis=1) if norm == "l1" else np.abs(bad).max(axis=1)
            order = np.lexsort(tuple(bad.T[::-1]) + (sizes,))
            for row in bad[order]:
                violations.append(Violation("momentum-combination", tuple(int(v) for v in row)))
            L_ok = int(sizes.min()) - 1
    return GenericityReport(generic=generic, L_generic_up_to=L_ok, violations=tuple(violations))


@dataclass(frozen=True)
class DensityResult:
    total: int
    generic_count: int
    fraction: float

    @property
    def stderr(self) -> float:
        p = self.fraction
        return math.sqrt(max(p * (1 - p), 0.0) / self.total) if self.total else 0.0

    def to_dict(self) -> dict:
        return {"total": self.total, "generic_count": self.generic_count, "fraction": self.fraction}


def _draw_supports(rng: np.random.Generator, count: int, d: int, R: int) -> np.ndarray:
    out = rng.integers(-R, R + 1, size=(count, d), dtype=np.int64)
    out.sort(axis=1)
    bad = np.any(np.diff(out, axis=1) == 0, axis=1) if d > 1 else np.zeros(count, bool)
    while bad.any():
        redo = rng.integers(-R, R + 1, size=(int(bad.sum()), d), dtype=np.int64)
        redo.sort(axis=1)
        out[bad] = redo
        bad = np.any(np.diff(out, axis=1) == 0, axis=1)
    return out


def density_experiment(
    d: int,
    R: int,
    L: int = 0,
    mode: str = "sampled",
    samples: int = 10_000,
    seed: int = 0,
    norm: str = "l1",
    workers: int = 1,
    chunk: int = 4096,
) -> DensityResult:
    """Fraction of ``L``-generic ordered supports inside ``[-R, R]``.

    ``mode="exhaustive"`` visits every ``d``-subset; ``"sampled"`` draws
    ``d`` distinct integers uniformly (rejecting collisions) and sorts.
    Sampling is done in fixed-size chunks with seeds spawned from
    ``seed``, so the result does not depend on ``workers``.
    """
    if d < 1 or R < 0:
        raise ValidationError("need d >= 1 and R >= 0")
    if 2 * R + 1 < d:
        raise ValidationError(f"[-R, R] has fewer than d={d} integers")
    ells = ell_ball(d, L, norm=norm, half=True) if L > 0 else np.zeros((0, d), np.int64)

    if mode == "exhaustive":
        total = comb(2 * R + 1, d)
        if total > EXHAUSTIVE_LIMIT:
            raise IntractableError(f"C({2 * R + 1},{d}) = {total} supports exceeds {EXHAUSTIVE_LIMIT}")
        sup = np.array(list(itertools.combinations(range(-R, R + 1), d)), dtype=np.int64).reshape(-1, d)
        good = int(kernels.generic_mask(sup, ells).sum())
        return DensityResult(total, good, good / total)
    if mode != "sampled":
        raise ValidationError(f"unknown mode {mode!r}")
    if samples <= 0:
        raise ValidationError("samples must be positive")

    nchunks = -(-samples // chunk)
    seeds = np.random.SeedSequence(seed).spawn(nchunks)
    sizes = [min(chunk, samples - c * chunk) for c in range(nchunks)]

    def run(c):
        rng = np.random.default_rng(seeds[c])
        sup = _draw_supports(rng, sizes[c], d, R)
        return int(kernels.generic_mask(sup, ells).sum())

    if workers > 1 and nchunks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(nchunks)))
    else:
        counts = [run(c) for c in range(nchunks)]
    good = sum(counts)
    return DensityResult(samples, good, good / samples)


# rectangles and Birkhoff resonances --------------------------------------


def is_rectangle(j1, j2, j3, j4) -> bool:
    """True iff ``j1 - j2 + j3 - j4 == 0`` and the squared norms cancel likewise."""
    sq = lambda j: j[0] * j[0] + j[1] * j[1]  # noqa: E731
    return (
        j1[0] - j2[0] + j3[0] - j4[0] == 0
        and j1[1] - j2[1] + j3[1] - j4[1] == 0
        and sq(j1) - sq(j2) + sq(j3) - sq(j4) == 0
    )


@dataclass(frozen=True, order=True)
class ResonantMonomial:
    """``exp(i ell.theta) * prod a_j^{sign}``; sign ``+1`` is ``a``, ``-1`` is ``conj(a)``."""

    ell: tuple[int, ...]
    factors: tuple[tuple[Site, int], ...]
    family: str = field(compare=False)

    @staticmethod
    def make(family, ell, factors) -> "ResonantMonomial":
        facs = tuple(sorted((Site(int(s[0]), int(s[1])), int(g)) for s, g in factors))
        return ResonantMonomial(tuple(int(v) for v in ell), facs, family)

    @property
    def key(self):
        return (self.ell, self.factors)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "ell": list(self.ell),
            "factors": [[s.m, s.n, g] for s, g in self.factors],
        }


def enumerate_birkhoff_resonant(s0, n_cutoff: int) -> list[ResonantMonomial]:
    """List the resonant quadratic monomials with ``|ell| = 2``.

    Families, for ``0 < |n| <= n_cutoff``:

    * ``"i"``: ``ell = e_i - e_j``, ``a_(m_j, n) conj(a_(m_i, n))``, ``|m_i| != |m_j|``;
    * ``"ii"``: the same shape when ``m_i == -m_j``;
    * ``"iii"``: ``ell = e_i + e_j``, ``conj(a_(m, n)) conj(a_(m_i + m_k - m, -n))``
      for upper-arc points of the circle over ``(i, k)``, plus the conjugate.

    Raises
    ------
    NonGenericError
        If the support fails the line/circle conditions.
    """
    s0 = _as_support(s0)
    if n_cutoff < 1:
        raise ValidationError("n_cutoff must be >= 1")
    rep = check_genericity(s0, 0)
    if not rep.generic:
        raise NonGenericError(f"support {s0.sites} is not generic: {[v.to_dict() for v in rep.violations]}")
    d = s0.d
    out = []
    eye = np.eye(d, dtype=int)
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            mi, mj = s0.sites[i], s0.sites[j]
            fam = "ii" if mi == -mj else "i"
            ell = eye[i] - eye[j]
            for n in range(-n_cutoff, n_cutoff + 1):
                if n == 0:
                    continue
                out.append(ResonantMonomial.make(fam, ell, [((mj, n), 1), ((mi, n), -1)]))
    for (i, k), pts in circle_loci(s0).items():
        mi, mk = s0.sites[i], s0.sites[k]
        for p in pts:
            if p.n <= 0 or p.n > n_cutoff:
                continue
            q = (mi + mk - p.m, -p.n)
            out.append(ResonantMonomial.make("iii", eye[i] + eye[k], [(p, -1), (q, -1)]))
            out.append(ResonantMonomial.make("iii", -eye[i] - eye[k], [(p, 1), (q, 1)]))
    return sorted(out)
