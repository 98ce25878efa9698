"""Spectral data of the first-order normal-form blocks.

For a parameter vector ``lam`` (all entries positive):

* ``P(t, lam) = prod(t + lam_i) - 2 * sum_i lam_i * prod_{j != i}(t + lam_j)``
  is the characteristic polynomial of ``M(lam)`` with ``M_ii = lam_i`` and
  ``M_ij = 2 sqrt(lam_i lam_j)``; its roots ``mu`` are sorted ascending.
* ``N(a, b) = [[a, 2 sqrt(ab)], [-2 sqrt(ab), -b]]`` has characteristic
  polynomial ``t**2 - (a - b) t + 3ab`` with roots
  ``mu_plus = (a - b - sqrt(r)) / 2`` and ``mu_minus = (a - b + sqrt(r)) / 2``,
  ``r = a**2 + b**2 - 14ab``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import ComplexSpectrumError, RepeatedEigenvalueError, ValidationError

__all__ = [
    "SpectralData",
    "BlockDiagonalization",
    "SIGMA",
    "as_lambda",
    "poly_P_coeffs",
    "poly_P_coeffs_exact",
    "build_M",
    "build_N",
    "mu_of_lambda",
    "mu_pm",
    "reality_diagnostics",
    "eigen_gap",
    "spectral_data",
    "find_domain_O1",
    "diagonalize_block",
    "distinct_tolerance",
]

SIGMA = np.diag([1.0, -1.0])

# cone constants: the nominal c+- used by the second diagnostic, and the roots of
# the radicand b**2 - 14ab + a**2 in the ratio b/a
NOMINAL_CONE = ((5 + math.sqrt(21)) / 2, (5 - math.sqrt(21)) / 2)
DERIVED_CONE = (7 + 4 * math.sqrt(3), 7 - 4 * math.sqrt(3))


def as_lambda(lam) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("lambda must be a nonempty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValidationError(f"lambda entries must be positive, got {arr.tolist()}")
    return arr


def _check_pair(a: float, b: float) -> tuple[float, float]:
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise ValidationError(f"need positive parameters, got ({a}, {b})")
    return a, b


def distinct_tolerance(lam) -> float:
    return 1e-8 * max(1.0, float(np.linalg.norm(lam)))


def poly_P_coeffs(lam) -> np.ndarray:
    """Coefficients of ``P(t, lam)`` in increasing degree (monic, length d+1)."""
    lam = as_lambda(lam)
    return _poly_P(lam.tolist(), float)


def poly_P_coeffs_exact(lam: Sequence) -> list[Fraction]:
    """Same as :func:`poly_P_coeffs` in exact rational arithmetic.

    Zero entries are allowed here so the specialization ``lam_d = 0`` can be
    checked.
    """
    return _poly_P([Fraction(v) for v in lam], Fraction)


def _poly_P(lam, kind):
    d = len(lam)
    zero, one = kind(0), kind(1)

    def mul(p, c):  # p(t) * (t + c)
        out = [zero] * (len(p) + 1)
        for k, a in enumerate(p):
            out[k] += a * c
            out[k + 1] += a
        return out

    full = [one]
    for c in lam:
        full = mul(full, c)
    total = list(full)
    for i in range(d):
        rest = [one]
        for j, c in enumerate(lam):
            if j != i:
                rest = mul(rest, c)
        for k, a in enumerate(rest):
            total[k] -= 2 * lam[i] * a
    return np.array(total) if kind is float else total


def build_M(lam) -> np.ndarray:
    lam = as_lambda(lam)
    root = np.sqrt(lam)
    M = 2.0 * np.outer(root, root)
    np.fill_diagonal(M, lam)
    return M


def build_N(lam_i: float, lam_k: float) -> np.ndarray:
    a, b = _check_pair(lam_i, lam_k)
    c = 2.0 * math.sqrt(a * b)
    return np.array([[a, c], [-c, -b]])


def mu_of_lambda(lam, check: bool = True) -> np.ndarray:
    """Ascending eigenvalues of ``M(lam)``.

    With ``check`` the result is compared with the companion-matrix roots of
    ``P`` and a ``RuntimeError`` is raised on disagreement beyond 1e-10
    (relative to the spectral scale). A root of multiplicity ``k`` is only
    resolved to about ``machine_eps**(1/k)`` by the companion matrix, so the
    tolerance is widened accordingly for clustered spectra.
    """
    lam = as_lambda(lam)
    mu = linalg.eigh(build_M(lam), eigvals_only=True)
    if check and lam.size > 1:
        roots = np.sort(np.roots(poly_P_coeffs(lam)[::-1]).real)
        scale = max(1.0, float(np.abs(mu).max()))
        close = np.diff(mu) <= 1e-4 * scale
        run = longest = 0
        for c in close:
            run = run + 1 if c else 0
            longest = max(longest, run)
        tol = max(1e-10, 10 * np.finfo(float).eps ** (1.0 / (longest + 1)))
        if np.max(np.abs(roots - mu)) > tol * scale:
            raise RuntimeError("eigensolve and companion roots disagree")
    return mu


def mu_pm(lam_i: float, lam_k: float) -> tuple[complex, complex]:
    """Roots ``(mu_plus, mu_minus)`` of ``t**2 - (a-b) t + 3ab``, principal square root."""
    a, b = _check_pair(lam_i, lam_k)
    root = np.sqrt(complex(a * a + b * b - 14 * a * b))
    return complex((a - b - root) / 2), complex((a - b + root) / 2)


def reality_diagnostics(lam_i: float, lam_k: float) -> dict:
    """Reality test for ``mu_plus, mu_minus`` with both cone conventions.

    ``real_distinct`` is decided by the radicand. ``paper_cone_value`` is
    ``(b - c_plus a)(b - c_minus a)`` with ``c = (5 +- sqrt 21)/2``;
    ``derived_cone_value`` uses ``7 +- 4 sqrt 3``, the ratio roots of the
    radicand, and equals the radicand itself. ``cone_conflict`` is set when
    the two cone tests disagree at this point.
    """
    a, b = _check_pair(lam_i, lam_k)
    rad = a * a + b * b - 14 * a * b
    nominal = (b - NOMINAL_CONE[0] * a) * (b - NOMINAL_CONE[1] * a)
    derived = (b - DERIVED_CONE[0] * a) * (b - DERIVED_CONE[1] * a)
    return {
        "lambda_pair": [a, b],
        "radicand": rad,
        "real_distinct": bool(rad > 0),
        "paper_cone_constants": list(NOMINAL_CONE),
        "paper_cone_value": nominal,
        "paper_cone_real": bool(nominal > 0),
        "derived_cone_roots": list(DERIVED_CONE),
        "derived_cone_value": derived,
        "cone_conflict": bool((nominal > 0) != (rad > 0)),
    }


@dataclass(frozen=True)
class SpectralData:
    lam: tuple[float, ...]
    mu: tuple[float, ...]
    mu_pm: dict = field(default_factory=dict)  # (i, k) -> (mu_plus, mu_minus)
    gap: float = math.inf
    all_real: bool = True

    def real_pairs(self) -> list[tuple[int, int]]:
        return [ik for ik, (p, m) in self.mu_pm.items() if p.imag == 0 and m.imag == 0]

    def to_dict(self) -> dict:
        def enc(z):
            return [z.real, z.imag]

        return {
            "lambda": list(self.lam),
            "mu": list(self.mu),
            "mu_pm": {f"{i},{k}": [enc(p), enc(m)] for (i, k), (p, m) in self.mu_pm.items()},
            "gap": self.gap if math.isfinite(self.gap) else None,
            "all_real": self.all_real,
            "real_distinct_map": {
                f"{i},{k}": p.imag == 0 and m.imag == 0 and p != m for (i, k), (p, m) in self.mu_pm.items()
            },
        }


def spectral_data(lam) -> SpectralData:
    lam = as_lambda(lam)
    mu = mu_of_lambda(lam)
    pairs = {
        (i, k): mu_pm(lam[i], lam[k]) for i, k in itertools.combinations(range(lam.size), 2)
    }
    all_real = all(p.imag == 0 and m.imag == 0 for p, m in pairs.values())
    return SpectralData(tuple(lam.tolist()), tuple(mu.tolist()), pairs, eigen_gap(lam), all_real)


def eigen_gap(lam) -> float:
    """Smallest distance between the real eigenvalues ``mu_i`` and real ``mu_pm``.

    Complex pairs are left out. A single eigenvalue gives ``inf``.
    """
    lam = as_lambda(lam)
    vals = list(mu_of_lambda(lam))
    for i, k in itertools.combinations(range(lam.size), 2):
        for z in mu_pm(lam[i], lam[k]):
            if z.imag == 0:
                vals.append(z.real)
    if len(vals) < 2:
        return math.inf
    v = np.sort(np.asarray(vals))
    return float(np.min(np.diff(v)))


def find_domain_O1(box, grid_per_dim: int, gap_min: float = 0.0) -> dict:
    """Grid points of ``box`` where every block has real distinct spectrum.

    Parameters
    ----------
    box : sequence of (lo, hi) pairs, one per coordinate
    grid_per_dim : int
        Points per axis (inclusive endpoints).
    gap_min : float
        Required eigenvalue gap.
    """
    box = [(float(lo), float(hi)) for lo, hi in box]
    if any(lo <= 0 or hi < lo for lo, hi in box):
        raise ValidationError("box must lie in the positive orthant with lo <= hi")
    if grid_per_dim < 1:
        raise ValidationError("grid_per_dim must be >= 1")
    axes = [np.linspace(lo, hi, grid_per_dim) for lo, hi in box]
    feasible = []
    for pt in itertools.product(*axes):
        lam = np.array(pt)
        mu = mu_of_lambda(lam, check=False)
        if lam.size > 1 and np.min(np.diff(mu)) < max(gap_min, distinct_tolerance(lam)):
            continue
        ok = all(
            reality_diagnostics(lam[i], lam[k])["real_distinct"]
            for i, k in itertools.combinations(range(lam.size), 2)
        )
        if ok and eigen_gap(lam) >= gap_min:
            feasible.append(lam.tolist())
    return {"feasible_points": feasible, "empty": not feasible, "grid_points": grid_per_dim ** len(box)}


@dataclass(frozen=True)
class BlockDiagonalization:
    """Change of variables for one normal-form block.

    ``U`` diagonalizes the block matrix; ``eigenvalues`` follow the column
    order of ``U``. For type II the columns are ordered by Krein sign
    (positive ``Sigma``-norm first) and ``krein_swapped`` says whether that
    order is ``(mu_minus, mu_plus)``.
    """

    block_type: str
    U: np.ndarray
    eigenvalues: tuple[float, ...]
    frequencies: tuple[float, ...]
    krein_swapped: bool = False

    def invariant_residual(self) -> float:
        """Max-entry deviation of ``U^T U`` from ``I`` (type I) or ``U^T Sigma U`` from ``Sigma``."""
        G = np.eye(len(self.U)) if self.block_type == "I" else SIGMA
        return float(np.max(np.abs(self.U.T @ G @ self.U - G)))

    def to_dict(self) -> dict:
        return {
            "block_type": self.block_type,
            "U": self.U.tolist(),
            "eigenvalues": list(self.eigenvalues),
            "frequencies": list(self.frequencies),
            "krein_swapped": self.krein_swapped,
        }


def diagonalize_block(block_type: str, lam, K: float = 0.0, eps: float = 1.0) -> BlockDiagonalization:
    """Diagonalize a type I (``K I + eps M``) or type II (``N``) block.

    Type I returns an orthogonal ``U`` with ``U^T M U = diag(mu)`` and
    frequencies ``K + eps mu``. Type II takes ``lam = (lam_i, lam_k)`` and
    returns a real ``U`` with ``U^{-1} N U`` diagonal and
    ``U^T Sigma U = Sigma``; frequencies are ``(K + eps nu_1, -(K + eps nu_2))``
    for the column eigenvalues ``nu``.

    Raises
    ------
    RepeatedEigenvalueError
        If two eigenvalues are closer than ``1e-8 max(1, |lam|)``.
    ComplexSpectrumError
        If a type II block has complex ``mu_pm``.
    """
    if block_type == "I":
        lam = as_lambda(lam)
        mu, U = linalg.eigh(build_M(lam))
        if lam.size > 1 and np.min(np.diff(mu)) < distinct_tolerance(lam):
            raise RepeatedEigenvalueError(f"repeated eigenvalue in {mu.tolist()}")
        U = U * np.where(U[np.argmax(np.abs(U), axis=0), range(U.shape[1])] < 0, -1.0, 1.0)
        return BlockDiagonalization("I", U, tuple(mu.tolist()), tuple((K + eps * mu).tolist()))
    if block_type != "II":
        raise ValidationError(f"unknown block type {block_type!r}")
    lam = as_lambda(lam)
    if lam.size != 2:
        raise ValidationError("type II block takes (lam_i, lam_k)")
    a, b = float(lam[0]), float(lam[1])
    plus, minus = mu_pm(a, b)
    if plus.imag != 0 or minus.imag != 0:
        raise ComplexSpectrumError(f"mu_pm complex at ({a}, {b})")
    if abs(plus.real - minus.real) < distinct_tolerance(lam):
        raise RepeatedEigenvalueError("mu_plus == mu_minus")
    c = 2.0 * math.sqrt(a * b)
    cols, norms = [], []
    for mu in (plus.real, minus.real):
        v = np.array([c, mu - a])  # kernel of N - mu I
        q = float(v @ SIGMA @ v)
        cols.append(v / math.sqrt(abs(q)))
        norms.append(q)
    swapped = norms[0] < 0
    order = [1, 0] if swapped else [0, 1]
    U = np.column_stack([cols[j] for j in order])
    U = U * np.where(U[0] < 0, -1.0, 1.0)
    nu = [(plus.real, minus.real)[j] for j in order]
    freqs = (K + eps * nu[0], -(K + eps * nu[1]))
    return BlockDiagonalization("II", U, tuple(nu), freqs, swapped)
