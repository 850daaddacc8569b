# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: p-variation dynamic programmes and the exhaustive
Chen-defect scan.  Contracts match `_kernels_py`; see there for the
documentation of each entry point."""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport fabs, pow
from libc.stdlib cimport free, malloc


def pvar_powersum_additive(double[:, ::1] prefix, double p):
    cdef Py_ssize_t m = prefix.shape[0]
    cdef Py_ssize_t d = prefix.shape[1]
    if m < 2:
        return 0.0
    cdef double half_p = 0.5 * p
    cdef double[::1] V = np.zeros(m)
    cdef Py_ssize_t i, j, k
    cdef double best, cand, d2, diff
    for j in range(1, m):
        best = -1.0
        for i in range(j):
            d2 = 0.0
            for k in range(d):
                diff = prefix[j, k] - prefix[i, k]
                d2 += diff * diff
            cand = V[i] + pow(d2, half_p)
            if cand > best:
                best = cand
        V[j] = best
    return float(V[m - 1])


def pvar_powersum_chen_mode(double[:, ::1] b1, double[:, ::1] B1,
                            double[:, ::1] b2, double[:, ::1] B2,
                            double[:, ::1] coord, double p):
    cdef Py_ssize_t m = b1.shape[0]
    cdef Py_ssize_t q = b1.shape[1]
    cdef Py_ssize_t q2 = q * q
    if m < 2:
        return 0.0
    if B1.shape[1] != q2 or coord.shape[1] != q2:
        raise ValueError("flattened second-level width must be q*q")
    cdef Py_ssize_t nc = coord.shape[0]
    cdef double half_p = 0.5 * p
    cdef double[::1] V = np.zeros(m)
    cdef double[::1] diff = np.zeros(q2)
    cdef Py_ssize_t i, j, a, c, k
    cdef double best, cand, d2, y, e1, e2
    for j in range(1, m):
        best = -1.0
        for i in range(j):
            # bb_{i,j} = B[j] - B[i] - b[i] (x) (b[j] - b[i]), per driver
            for a in range(q):
                for c in range(q):
                    k = a * q + c
                    e1 = B1[j, k] - B1[i, k] - b1[i, a] * (b1[j, c] - b1[i, c])
                    e2 = B2[j, k] - B2[i, k] - b2[i, a] * (b2[j, c] - b2[i, c])
                    diff[k] = e1 - e2
            d2 = 0.0
            for c in range(nc):
                y = 0.0
                for k in range(q2):
                    y += coord[c, k] * diff[k]
                d2 += y * y
            cand = V[i] + pow(d2, half_p)
            if cand > best:
                best = cand
        V[j] = best
    return float(V[m - 1])


def chen_defect_scan_mode(double[:, ::1] b, double[:, ::1] B):
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t q = b.shape[1]
    cdef Py_ssize_t q2 = q * q
    if B.shape[1] != q2:
        raise ValueError("flattened second-level width must be q*q")
    if q > 16:
        raise ValueError("mode count above 16 not supported by the compiled scan")
    if m < 3:
        return 0.0
    cdef double[::1] per_u = np.zeros(m)
    cdef Py_ssize_t u, s, t, a, c, k
    cdef double worst, d, bb_st, bb_ut, bsa, bua, dsa
    # thread-local scratch (malloc per prange iteration): per-(s,u) pair value
    # and increment, then per-(t) node differences
    cdef double *scratch
    cdef double *dtu
    cdef double *dts
    for u in prange(1, m - 1, nogil=True, schedule="dynamic"):
        scratch = <double *> malloc((q2 + 3 * q) * sizeof(double))
        dtu = scratch + q2 + q
        dts = scratch + q2 + 2 * q
        worst = 0.0
        for s in range(u):
            for a in range(q):
                scratch[q2 + a] = b[u, a] - b[s, a]
                for c in range(q):
                    k = a * q + c
                    scratch[k] = B[u, k] - B[s, k] - b[s, a] * (b[u, c] - b[s, c])
            for t in range(u + 1, m):
                for c in range(q):
                    dtu[c] = b[t, c] - b[u, c]
                    dts[c] = b[t, c] - b[s, c]
                for a in range(q):
                    bsa = b[s, a]
                    bua = b[u, a]
                    dsa = scratch[q2 + a]
                    for c in range(q):
                        k = a * q + c
                        bb_st = B[t, k] - B[s, k] - bsa * dts[c]
                        bb_ut = B[t, k] - B[u, k] - bua * dtu[c]
                        d = fabs(bb_st - scratch[k] - bb_ut - dsa * dtu[c])
                        if d > worst:
                            worst = d
        per_u[u] = worst
        free(scratch)
    return float(np.max(per_u))
