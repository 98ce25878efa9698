"""Quadratic Hamiltonians on a finite lattice truncation.

A real quadratic Hamiltonian with angle dependence is stored as two stacks
of dense matrices indexed by the Fourier mode ``ell``::

    H = sum_ell e^{i ell.theta} [ sum_{j,k} A_ell[j,k] a_j conj(a_k)
                                 + 1/2 sum_{j,k} B_ell[j,k] a_j a_k
                                 + 1/2 sum_{j,k} C_ell[j,k] conj(a_j) conj(a_k) ]

with ``B_ell`` symmetric and ``C_ell = conj(B_{-ell})``. Reality means
``A_ell = conj(A_{-ell}).T``.

Coefficient keys ``(sign, ell, m1, m2, n)`` address ``A_ell[(m1,n), (m2,n)]``
for ``sign = "-"`` and ``B_ell[(m1,n), (m2,-n)]`` for ``sign = "+"``. The
selection rules are ``sum(ell) == 0`` and ``ell.m0 + m1 - m2 == 0`` for
``A`` and ``sum(ell) == -2`` and ``ell.m0 + m1 + m2 == 0`` for ``B``.

The Poisson bracket is ``{F, G} = sum(dF/dtheta dG/dY - dF/dY dG/dtheta)
+ i sum(dF/da_j dG/dconj(a_j) - dF/dconj(a_j) dG/da_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .lattice import Site, SupportSet, _as_support, ell_ball

__all__ = [
    "TruncationGrid",
    "TruncatedQuadHam",
    "poisson_bracket",
    "bracket_with_diagonal",
    "majorant_norm",
    "order_norm",
    "bony_split",
    "bony_constant",
    "bony_smoothing_check",
]


@dataclass(frozen=True)
class TruncationGrid:
    """Sites ``|m| <= Mx, |n| <= Ny`` minus the tangential ones, modes ``|ell|_1 <= Lmax``."""

    s0: SupportSet
    Mx: int
    Ny: int
    Lmax: int
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "s0", _as_support(self.s0))
        if self.Mx < 0 or self.Ny < 0 or self.Lmax < 0:
            raise ValidationError("grid bounds must be nonnegative")
        if not self.p > 1:
            raise ValidationError("weight exponent p must exceed 1")

    @property
    def d(self) -> int:
        return self.s0.d

    @cached_property
    def sites(self) -> tuple[Site, ...]:
        tang = set(self.s0.sites)
        return tuple(
            Site(m, n)
            for m in range(-self.Mx, self.Mx + 1)
            for n in range(-self.Ny, self.Ny + 1)
            if not (n == 0 and m in tang)
        )

    @cached_property
    def index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}

    @property
    def size(self) -> int:
        return len(self.sites)

    @cached_property
    def m(self) -> np.ndarray:
        return np.array([s.m for s in self.sites], dtype=np.int64)

    @cached_property
    def n(self) -> np.ndarray:
        return np.array([s.n for s in self.sites], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        """``<j>**p`` for every site."""
        return (1.0 + self.m.astype(float) ** 2 + self.n.astype(float) ** 2) ** (self.p / 2)

    @cached_property
    def ells(self) -> np.ndarray:
        zero = np.zeros((1, self.d), dtype=np.int64)
        if self.Lmax == 0:
            return zero
        return np.vstack([zero, ell_ball(self.d, self.Lmax)])

    @cached_property
    def ell_index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in e): i for i, e in enumerate(self.ells)}

    @cached_property
    def neg(self) -> np.ndarray:
        return np.array([self.ell_index[tuple(int(-v) for v in e)] for e in self.ells])

    @cached_property
    def ell_norm(self) -> np.ndarray:
        return np.abs(self.ells).sum(axis=1)

    @cached_property
    def allowed(self) -> tuple[np.ndarray, np.ndarray]:
        """Boolean masks of entries permitted by the selection rules, for ``A`` and ``B``."""
        eta = self.ells.sum(axis=1)
        pi = self.ells @ np.asarray(self.s0.sites, dtype=np.int64)
        m, n = self.m, self.n
        same_n = n[:, None] == n[None, :]
        opp_n = n[:, None] == -n[None, :]
        dm = m[:, None] - m[None, :]
        sm = m[:, None] + m[None, :]
        A = (eta == 0)[:, None, None] & same_n[None] & (pi[:, None, None] + dm[None] == 0)
        B = (eta == -2)[:, None, None] & opp_n[None] & (pi[:, None, None] + sm[None] == 0)
        return A, B

    @property
    def shape(self) -> tuple[int, int, int]:
        return (len(self.ells), self.size, self.size)


@dataclass
class TruncatedQuadHam:
    grid: TruncationGrid
    A: np.ndarray
    B: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        shp = self.grid.shape
        self.A = np.asarray(self.A, dtype=complex)
        self.B = np.asarray(self.B, dtype=complex)
        if self.A.shape != shp or self.B.shape != shp:
            raise ValidationError(f"coefficient arrays must have shape {shp}")

    # construction -----------------------------------------------------------

    @classmethod
    def zeros(cls, grid: TruncationGrid) -> "TruncatedQuadHam":
        return cls(grid, np.zeros(grid.shape, complex), np.zeros(grid.shape, complex))

    @classmethod
    def from_keys(cls, grid: TruncationGrid, coeffs: Mapping, enforce_reality: bool = True) -> "TruncatedQuadHam":
        """Build from ``{(sign, ell, m1, m2, n): value}``.

        With ``enforce_reality`` the conjugate partner of each ``"-"`` key is
        set as well (a self-partnered key keeps its real part). ``"+"`` keys
        are always stored symmetrically.
        """
        H = cls.zeros(grid)
        for key, val in coeffs.items():
            sign, ell, m1, m2, n = key
            ell = tuple(int(v) for v in ell)
            try:
                li = grid.ell_index[ell]
                if sign == "-":
                    j, k = grid.index[Site(m1, n)], grid.index[Site(m2, n)]
                elif sign == "+":
                    j, k = grid.index[Site(m1, n)], grid.index[Site(m2, -n)]
                else:
                    raise ValidationError(f"sign must be '+' or '-', got {sign!r}")
            except KeyError as exc:
                raise ValidationError(f"key {key!r} outside the truncation") from exc
            if sign == "-":
                H.A[li, j, k] = val
                if enforce_reality:
                    if li == grid.neg[li] and j == k:
                        H.A[li, j, k] = complex(val).real
                    else:
                        H.A[grid.neg[li], k, j] = np.conj(val)
            else:
                H.B[li, j, k] = val
                H.B[li, k, j] = val
        return H

    def to_keys(self, tol: float = 0.0) -> dict:
        g = self.grid
        out = {}
        for arr, sign in ((self.A, "-"), (self.B, "+")):
            for li, j, k in zip(*np.nonzero(np.abs(arr) > tol)):
                ell = tuple(int(v) for v in g.ells[li])
                sj, sk = g.sites[j], g.sites[k]
                out[(sign, ell, sj.m, sk.m, sj.n)] = complex(arr[li, j, k])
        return out

    @classmethod
    def diagonal(cls, grid: TruncationGrid, D: np.ndarray) -> "TruncatedQuadHam":
        """``sum_j D_j |a_j|**2``."""
        H = cls.zeros(grid)
        H.A[grid.ell_index[(0,) * grid.d]] = np.diag(np.asarray(D, dtype=float))
        return H

    def copy(self) -> "TruncatedQuadHam":
        return TruncatedQuadHam(self.grid, self.A.copy(), self.B.copy(), self.truncation_loss)

    # algebra ----------------------------------------------------------------

    def _check(self, other: "TruncatedQuadHam"):
        if other.grid != self.grid:
            raise ValidationError("grid mismatch")

    def __add__(self, other):
        self._check(other)
        return TruncatedQuadHam(self.grid, self.A + other.A, self.B + other.B, self.truncation_loss + other.truncation_loss)

    def __sub__(self, other):
        self._check(other)
        return TruncatedQuadHam(self.grid, self.A - other.A, self.B - other.B, self.truncation_loss + other.truncation_loss)

    def __mul__(self, c: float):
        return TruncatedQuadHam(self.grid, self.A * c, self.B * c, self.truncation_loss * abs(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @property
    def C(self) -> np.ndarray:
        return np.conj(self.B[self.grid.neg])

    def is_zero(self) -> bool:
        return not (np.any(self.A) or np.any(self.B))

    def max_abs(self) -> float:
        return float(max(np.abs(self.A).max(initial=0.0), np.abs(self.B).max(initial=0.0)))

    def project(self, N: float, above: bool = False) -> "TruncatedQuadHam":
        """Keep modes with ``|ell|_1 <= N`` (or ``> N`` when ``above``)."""
        keep = self.grid.ell_norm > N if above else self.grid.ell_norm <= N
        k = keep[:, None, None]
        return TruncatedQuadHam(self.grid, np.where(k, self.A, 0), np.where(k, self.B, 0))

    def average(self) -> np.ndarray:
        """Angle average of the action part: real diagonal of ``A_0``."""
        return np.real(np.diagonal(self.A[self.grid.ell_index[(0,) * self.grid.d]])).copy()

    # invariants -------------------------------------------------------------

    def reality_defect(self) -> float:
        g = self.grid
        dA = np.abs(self.A - np.conj(np.swapaxes(self.A[g.neg], 1, 2))).max(initial=0.0)
        dB = np.abs(self.B - np.swapaxes(self.B, 1, 2)).max(initial=0.0)
        return float(max(dA, dB))

    def selection_defect(self) -> float:
        """Largest coefficient stored on an entry forbidden by the selection rules."""
        okA, okB = self.grid.allowed
        return float(max(np.abs(self.A[~okA]).max(initial=0.0), np.abs(self.B[~okB]).max(initial=0.0)))


def _nonzero_modes(arr: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.any(arr != 0, axis=(1, 2)))


def poisson_bracket(F: TruncatedQuadHam, G: TruncatedQuadHam, loss_s: float = 0.0) -> TruncatedQuadHam:
    """``{F, G}`` on the truncation, with ``ell`` modes beyond ``Lmax`` dropped.

    The weighted majorant norm (at ``s = loss_s``) of the dropped modes is
    added to ``truncation_loss`` of the result.
    """
    F._check(G)
    g = F.grid
    out = TruncatedQuadHam.zeros(g)
    dropped = {}
    FA, FB, FC = F.A, F.B, F.C
    GA, GB, GC = G.A, G.B, G.C
    fa, fb, fc = _nonzero_modes(FA), _nonzero_modes(FB), _nonzero_modes(FC)
    ga, gb, gc = _nonzero_modes(GA), _nonzero_modes(GB), _nonzero_modes(GC)
    ells = g.ells

    def target(a, b):
        key = tuple(int(v) for v in ells[a] + ells[b])
        return key, g.ell_index.get(key)

    def emit(which, a, b, M):
        key, t = target(a, b)
        if t is not None:
            (out.A if which == "A" else out.B)[t] += M
        else:
            dA, dB = dropped.setdefault(key, [0, 0])
            dropped[key] = [dA + M, dB] if which == "A" else [dA, dB + M]

    # A_new = i (A' A - A A' + B C' - B' C)
    for a in fa:
        for b in ga:
            emit("A", a, b, 1j * (GA[b] @ FA[a] - FA[a] @ GA[b]))
    for a in fb:
        for b in gc:
            emit("A", a, b, 1j * (FB[a] @ GC[b]))
    for a in fc:
        for b in gb:
            emit("A", a, b, -1j * (GB[b] @ FC[a]))
    # B_new = i (B A'^T + A' B - A B' - B' A^T)
    for a in fb:
        for b in ga:
            emit("B", a, b, 1j * (FB[a] @ GA[b].T + GA[b] @ FB[a]))
    for a in fa:
        for b in gb:
            emit("B", a, b, -1j * (FA[a] @ GB[b] + GB[b] @ FA[a].T))
    loss = 0.0
    if dropped:
        W = g.weights
        T = np.zeros((g.size, g.size))
        for key, (dA, dB) in dropped.items():
            w = math.exp(loss_s * sum(abs(v) for v in key))
            T += w * (np.abs(np.asarray(dA)).T + np.abs(np.asarray(dB)))
        loss = float(np.linalg.norm(W[:, None] * T / W[None, :], 2))
    out.truncation_loss = F.truncation_loss + G.truncation_loss + loss
    return out


def bracket_with_diagonal(omega: np.ndarray, D: np.ndarray, G: TruncatedQuadHam) -> TruncatedQuadHam:
    """``{omega.Y + sum D_j |a_j|**2, G}``: multiplies entries by ``-i`` times their divisor."""
    divA, divB = divisors(G.grid, omega, D)
    return TruncatedQuadHam(G.grid, -1j * divA * G.A, -1j * divB * G.B)


def divisors(grid: TruncationGrid, omega: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``omega.ell + D_j - D_k`` and ``omega.ell + D_j + D_k`` on the full coefficient shape."""
    w = grid.ells @ np.asarray(omega, dtype=float)
    D = np.asarray(D, dtype=float)
    divA = w[:, None, None] + (D[:, None] - D[None, :])[None]
    divB = w[:, None, None] + (D[:, None] + D[None, :])[None]
    return divA, divB


# norms ------------------------------------------------------------------------


def _operator(grid: TruncationGrid, A: np.ndarray, B: np.ndarray, s: float) -> np.ndarray:
    ew = np.exp(s * grid.ell_norm)[:, None, None]
    T = (ew * (np.abs(np.swapaxes(A, 1, 2)) + np.abs(B))).sum(axis=0)
    W = grid.weights
    return W[:, None] * T / W[None, :]


def _op_norm(M: np.ndarray, ord) -> float:
    if not M.any():
        return 0.0
    if ord == 2:
        return float(np.linalg.norm(M, 2))
    if ord in ("inf", np.inf):
        return float(np.abs(M).sum(axis=1).max())
    raise ValidationError(f"unsupported norm order {ord!r}")


def majorant_norm(H: TruncatedQuadHam, s: float, ord=2) -> float:
    """Weighted operator norm of the majorant matrix.

    The nonnegative matrix ``sum_ell e^{|ell|_1 s} (|A_ell|^T + |B_ell|)`` is
    conjugated by the site weights ``<j>**p`` and its 2-norm returned
    (``ord="inf"`` gives the max row sum instead, as a cross-check).
    """
    if s < 0:
        raise ValidationError("s must be nonnegative")
    return _op_norm(_operator(H.grid, H.A, H.B, s), ord)


def order_weights(grid: TruncationGrid, N: tuple[float, float], mode: str = "max") -> np.ndarray:
    bm = np.sqrt(1.0 + grid.m.astype(float) ** 2)
    bn = np.sqrt(1.0 + grid.n.astype(float) ** 2)
    N1, N2 = N
    if mode == "max":
        return np.maximum(bm ** (-N1), bn ** (-N2))
    if mode == "sum":
        return bm ** (-N1) + bn ** (-N2)
    raise ValidationError(f"unknown order weight mode {mode!r}")


def order_norm(H: TruncatedQuadHam, s: float, N: tuple[float, float], mode: str = "max", ord=2) -> float:
    """Majorant norm after weighting each coefficient by its first site.

    The coefficient at ``(m1, n)`` is multiplied by
    ``max(<m1>**-N1, <n>**-N2)``; ``mode="sum"`` uses the sum of the two
    powers instead.
    """
    if s < 0:
        raise ValidationError("s must be nonnegative")
    w = order_weights(H.grid, N, mode)[None, :, None]
    return _op_norm(_operator(H.grid, w * H.A, w * H.B, s), ord)


def bony_constant(s0) -> float:
    return 1.0 / (2.0 * max(1, _as_support(s0).max_abs))


def bony_split(
    H: TruncatedQuadHam,
    s: float | None = None,
    s_prime: float | None = None,
    c: float | None = None,
) -> tuple[TruncatedQuadHam, TruncatedQuadHam]:
    """Split into a para-diagonal part and a smoothing remainder.

    An entry joining sites with x-modes ``m1, m2`` stays in the first part
    when ``|ell|_1 <= c max(<m1>, <m2>)``; the rest forms the remainder. The
    two parts add up to ``H`` exactly and each is real.

    ``s`` and ``s_prime`` only serve as a consistency check
    (``0 < s_prime < s``); the split itself does not depend on them.
    """
    if s is not None or s_prime is not None:
        if s is None or s_prime is None or not 0 < s_prime < s:
            raise ValidationError("need 0 < s_prime < s")
    g = H.grid
    c = bony_constant(g.s0) if c is None else float(c)
    bm = np.sqrt(1.0 + g.m.astype(float) ** 2)
    big = np.maximum(bm[:, None], bm[None, :])
    keep = g.ell_norm[:, None, None] <= c * big[None]
    HB = TruncatedQuadHam(g, np.where(keep, H.A, 0), np.where(keep, H.B, 0))
    HR = TruncatedQuadHam(g, np.where(keep, 0, H.A), np.where(keep, 0, H.B))
    return HB, HR


def bony_smoothing_check(
    H: TruncatedQuadHam,
    s: float,
    s_prime: float,
    k: int,
    N: tuple[float, float] = (0.0, 0.0),
    c: float | None = None,
) -> dict:
    """Compare the remainder's gain of ``k`` x-derivatives with its a priori bound.

    Returns ``lhs``, the order norm of the remainder at width ``s_prime`` with
    ``k`` extra powers of ``<m1>``, and ``rhs = k! (s - s_prime)**-k
    (1 + c**-k)`` times the order norm of ``H`` at width ``s``.
    """
    c = bony_constant(H.grid.s0) if c is None else float(c)
    _, HR = bony_split(H, s, s_prime, c)
    N1, N2 = N
    lhs = order_norm(HR, s_prime, (-(N1 + k), -N2))
    factor = math.factorial(k) * (s - s_prime) ** (-k) * (1.0 + c ** (-k))
    rhs = factor * order_norm(H, s, (-N1, -N2))
    return {"lhs": lhs, "rhs": rhs, "factor": factor, "holds": bool(lhs <= rhs * (1 + 1e-12))}
