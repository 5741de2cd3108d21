# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled empirical-likelihood kernel.

Same contract as ``elcheck._accel.fallback.el_curve``: column-wise bracketed
Newton solve of the Lagrange equation on unit-scale marks, returning the
log-EL-ratio, the multiplier on the raw scale, and a status code per column.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, log1p

cnp.import_array()

DEF STATUS_OK = 0
DEF STATUS_ALL_ZERO = 1
DEF STATUS_DEGENERATE = 2
DEF STATUS_NO_CONVERGENCE = 3


def el_curve(object marks, double tol=1e-10, int max_iter=200):
    """Column-wise EL log-ratio for an (n, g) matrix of marks."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] m = np.ascontiguousarray(
        marks, dtype=np.float64
    )
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t g = m.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] log_ratio = np.zeros(g)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lam_out = np.zeros(g)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] status = np.zeros(g, dtype=np.int8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(n)

    cdef Py_ssize_t i, j, it
    cdef double v, col_max, col_min, scale
    cdef double lo, hi, lam, gval, gprime, ratio, cand, ell
    cdef bint solved

    for j in range(g):
        col_max = -np.inf
        col_min = np.inf
        scale = 0.0
        for i in range(n):
            v = m[i, j]
            if v > col_max:
                col_max = v
            if v < col_min:
                col_min = v
            if fabs(v) > scale:
                scale = fabs(v)
        if scale == 0.0:
            status[j] = STATUS_ALL_ZERO
            continue
        if col_max <= 0.0 or col_min >= 0.0:
            status[j] = STATUS_DEGENERATE
            log_ratio[j] = np.inf
            lam_out[j] = np.nan
            continue

        for i in range(n):
            buf[i] = m[i, j] / scale
        lo = -scale / col_max
        hi = -scale / col_min
        lam = 0.0
        solved = False
        for it in range(max_iter):
            gval = 0.0
            gprime = 0.0
            for i in range(n):
                ratio = buf[i] / (1.0 + lam * buf[i])
                gval += ratio
                gprime -= ratio * ratio
            if fabs(gval) <= tol:
                solved = True
                break
            if gval > 0.0:
                lo = lam
            else:
                hi = lam
            cand = lam - gval / gprime
            if cand <= lo or cand >= hi:
                cand = 0.5 * (lo + hi)
            lam = cand
        if not solved:
            status[j] = STATUS_NO_CONVERGENCE
            log_ratio[j] = np.nan
            lam_out[j] = np.nan
            continue
        ell = 0.0
        for i in range(n):
            ell += log1p(lam * buf[i])
        log_ratio[j] = 2.0 * ell
        lam_out[j] = lam / scale

    return log_ratio, lam_out, status
