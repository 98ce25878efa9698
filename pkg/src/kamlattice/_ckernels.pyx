# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isnan, INFINITY

cnp.import_array()

NAME = "cython"


cdef inline long long _isqrt(long long q) nogil:
    cdef long long r = <long long> sqrt(<double> q)
    while r * r > q:
        r -= 1
    while (r + 1) * (r + 1) <= q:
        r += 1
    return r


cdef bint _row_generic(const long long[:] row, long long[:, :] buf) nogil:
    cdef Py_ssize_t d = row.shape[0]
    cdef Py_ssize_t a, b, c, p, npts = 0
    cdef long long mi, mk, m, diam2, rest, q, n, t
    for a in range(d):
        for b in range(a + 1, d):
            mi = row[a]
            mk = row[b]
            diam2 = (mk - mi) * (mk - mi)
            m = mi
            while m <= mk:
                t = 2 * m - mi - mk
                rest = diam2 - t * t
                if rest > 0 and (rest & 3) == 0:
                    q = rest >> 2
                    n = _isqrt(q)
                    if n * n == q:
                        for c in range(d):
                            if row[c] == m:
                                return False
                        for p in range(npts):
                            if buf[p, 0] == m and buf[p, 1] == n:
                                return False
                        if npts < buf.shape[0]:
                            buf[npts, 0] = m
                            buf[npts, 1] = n
                            npts += 1
                m += 1
    return True


def generic_mask(supports, ells):
    cdef const long long[:, :] sup = np.ascontiguousarray(supports, dtype=np.int64)
    cdef const long long[:, :] L = np.ascontiguousarray(ells, dtype=np.int64)
    cdef Py_ssize_t S = sup.shape[0], d = sup.shape[1], E = L.shape[0]
    out_arr = np.ones(S, dtype=np.uint8)
    cdef unsigned char[:] out = out_arr
    cdef long long span = 0
    cdef Py_ssize_t s, e, c
    cdef long long dot
    for s in range(S):
        if d > 1 and sup[s, d - 1] - sup[s, 0] > span:
            span = sup[s, d - 1] - sup[s, 0]
    buf_arr = np.zeros((max(1, d * (d - 1) // 2 * (2 * span + 2)), 2), dtype=np.int64)
    cdef long long[:, :] buf = buf_arr
    with nogil:
        for s in range(S):
            for e in range(E):
                dot = 0
                for c in range(d):
                    dot += sup[s, c] * L[e, c]
                if dot == 0:
                    out[s] = 0
                    break
            if out[s] and not _row_generic(sup[s], buf):
                out[s] = 0
    return out_arr.astype(bool)


def min_scaled_divisor(K, ell, theta_idx, theta_sign, weight, lam, theta_table, double eps):
    cdef const double[:] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[:, :] Lv = np.ascontiguousarray(ell, dtype=np.float64)
    cdef const long long[:, :] Iv = np.ascontiguousarray(theta_idx, dtype=np.int64)
    cdef const double[:, :] Sv = np.ascontiguousarray(theta_sign, dtype=np.float64)
    cdef const double[:] Wv = np.ascontiguousarray(weight, dtype=np.float64)
    cdef const double[:, :] lamv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const double[:, :] tab = np.ascontiguousarray(theta_table, dtype=np.float64)
    cdef Py_ssize_t S = lamv.shape[0], T = Kv.shape[0], d = Lv.shape[1], R = Iv.shape[1]
    out_arr = np.full(S, np.inf)
    cdef double[:] out = out_arr
    cdef Py_ssize_t s, t, c, r
    cdef double F, v, best
    cdef long long j
    with nogil:
        for s in range(S):
            best = INFINITY
            for t in range(T):
                F = 0.0
                for c in range(d):
                    F -= lamv[s, c] * Lv[t, c]
                for r in range(R):
                    j = Iv[t, r]
                    if j >= 0:
                        F += Sv[t, r] * tab[s, j]
                v = fabs(Kv[t] + eps * F) * Wv[t] / eps
                if not isnan(v) and v < best:
                    best = v
            out[s] = best
    return out_arr
