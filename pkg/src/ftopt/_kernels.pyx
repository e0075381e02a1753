# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay bit-for-bit equivalent to _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline void _argsort_small(const double[:] v, Py_ssize_t n, Py_ssize_t* idx) noexcept nogil:
    # insertion sort on (value, column); n is tiny (number of agents)
    cdef Py_ssize_t i, j, cur
    for i in range(n):
        idx[i] = i
    for i in range(1, n):
        cur = idx[i]
        j = i - 1
        while j >= 0 and v[idx[j]] > v[cur]:
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = cur


def trimmed_round(double[:, :] W, double[:, :] G, int f, double lam):
    """Trimmed-mean estimate and trimmed gradient midpoint for every row."""
    cdef Py_ssize_t r = W.shape[0], n = W.shape[1]
    cdef Py_ssize_t keep = n - 2 * f
    if keep < 1:
        raise ValueError("need more than 2f values per row")
    if G.shape[0] != r or G.shape[1] != n:
        raise ValueError("W and G must have the same shape")
    x_new = np.empty(r, dtype=np.float64)
    w_bar = np.empty(r, dtype=np.float64)
    g_mid = np.empty(r, dtype=np.float64)
    keep_w = np.empty((r, keep), dtype=np.intp)
    keep_g = np.empty((r, keep), dtype=np.intp)
    cdef double[:] xv = x_new, wv = w_bar, gv = g_mid
    cdef Py_ssize_t[:, :] kw = keep_w, kg = keep_g
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t i, k
    cdef double s, gt
    try:
        for i in range(r):
            _argsort_small(W[i], n, idx)
            s = 0.0
            for k in range(keep):
                kw[i, k] = idx[f + k]
                s += W[i, idx[f + k]]
            s = s / keep
            _argsort_small(G[i], n, idx)
            for k in range(keep):
                kg[i, k] = idx[f + k]
            gt = 0.5 * (G[i, idx[f]] + G[i, idx[n - f - 1]])
            wv[i] = s
            gv[i] = gt
            xv[i] = s - lam * gt
    finally:
        free(idx)
    return x_new, w_bar, g_mid, keep_w, keep_g


def envelope_bounds(double[:, :] G, double beta, int gamma):
    """Per-row (min, max) of sum(a_i g_i) over weights with >= gamma entries >= beta."""
    cdef Py_ssize_t r = G.shape[0], m = G.shape[1]
    if m < 1 or gamma > m or gamma < 0:
        raise ValueError("need 0 <= gamma <= row length and a non-empty row")
    lo = np.empty(r, dtype=np.float64)
    hi = np.empty(r, dtype=np.float64)
    cdef double[:] lv = lo, hv = hi
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(m * sizeof(Py_ssize_t))
    cdef Py_ssize_t i, k
    cdef double rest = 1.0 - gamma * beta
    cdef double s_lo, s_hi
    try:
        for i in range(r):
            _argsort_small(G[i], m, idx)
            s_lo = 0.0
            s_hi = 0.0
            for k in range(gamma):
                s_lo += G[i, idx[k]]
                s_hi += G[i, idx[m - 1 - k]]
            lv[i] = beta * s_lo + rest * G[i, idx[0]]
            hv[i] = beta * s_hi + rest * G[i, idx[m - 1]]
    finally:
        free(idx)
    return lo, hi


def displaced_mean(double[:] w, double[:] g, double lam):
    """Mean of w_i - lam * g_i, summed in index order."""
    cdef Py_ssize_t n = w.shape[0], i
    if n == 0 or g.shape[0] != n:
        raise ValueError("need equally sized, non-empty w and g")
    cdef double s = 0.0
    for i in range(n):
        s += w[i] - lam * g[i]
    return s / n
