"""Pure-Python reference implementations of the hot kernels.

Used when the compiled extension is missing or when
``KAMLATTICE_BACKEND=python`` is set. The compiled module exposes the same
functions with the same signatures.
"""
from __future__ import annotations

import math

import numpy as np

NAME = "python"


def _row_is_generic(row) -> bool:
    d = len(row)
    support = set(row)
    seen = set()
    for a in range(d):
        for b in range(a + 1, d):
            mi, mk = row[a], row[b]
            diam2 = (mk - mi) * (mk - mi)
            for m in range(mi, mk + 1):
                rest = diam2 - (2 * m - mi - mk) ** 2
                if rest <= 0 or rest & 3:
                    continue
                q = rest >> 2
                n = math.isqrt(q)
                if n * n != q:
                    continue
                if m in support:
                    return False
                if (m, n) in seen:
                    return False
                seen.add((m, n))
    return True


def generic_mask(supports: np.ndarray, ells: np.ndarray) -> np.ndarray:
    """Boolean mask of supports that are generic and ``ells``-nonresonant.

    Parameters
    ----------
    supports : (S, d) int64, each row strictly increasing
    ells : (E, d) int64, momentum vectors that must not annihilate a row

    Returns
    -------
    (S,) bool
    """
    supports = np.ascontiguousarray(supports, dtype=np.int64)
    ells = np.ascontiguousarray(ells, dtype=np.int64)
    out = np.ones(len(supports), dtype=bool)
    if len(ells):
        step = max(1, 2_000_000 // max(len(ells), 1))
        for lo in range(0, len(supports), step):
            dots = supports[lo : lo + step] @ ells.T
            out[lo : lo + step] &= ~np.any(dots == 0, axis=1)
    for s in np.flatnonzero(out):
        out[s] = _row_is_generic(supports[s].tolist())
    return out


def min_scaled_divisor(
    K: np.ndarray,
    ell: np.ndarray,
    theta_idx: np.ndarray,
    theta_sign: np.ndarray,
    weight: np.ndarray,
    lam: np.ndarray,
    theta_table: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Per-sample minimum of ``|K + eps*F(lam)| * weight / eps`` over tuples.

    ``F(lam) = -lam.ell + sum_r sign[t, r] * theta_table[s, idx[t, r]]``; an
    index of ``-1`` marks an unused slot. Tuples whose theta value is NaN at
    a sample are skipped there; a sample with no finite tuple gives ``inf``.
    """
    K = np.asarray(K, dtype=np.float64)
    ell = np.asarray(ell, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    table = np.asarray(theta_table, dtype=np.float64)
    idx = np.asarray(theta_idx, dtype=np.int64)
    sgn = np.asarray(theta_sign, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    S, T = len(lam), len(K)
    out = np.full(S, np.inf)
    if T == 0 or S == 0:
        return out
    step = max(1, 4_000_000 // T)
    for lo in range(0, S, step):
        hi = min(S, lo + step)
        F = -(lam[lo:hi] @ ell.T)
        for r in range(idx.shape[1]):
            used = idx[:, r] >= 0
            if not used.any():
                continue
            vals = table[lo:hi][:, np.where(used, idx[:, r], 0)]
            F += np.where(used, sgn[:, r], 0.0) * np.where(used, vals, 0.0)
        val = np.abs(K + eps * F) * w / eps
        val[np.isnan(val)] = np.inf
        out[lo:hi] = val.min(axis=1)
    return out
