"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``.

Summation order matches the compiled version exactly, so both backends
produce bit-identical results.
"""

from __future__ import annotations

import numpy as np


def trimmed_round(W, G, f, lam):
    W = np.asarray(W, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if W.ndim != 2 or G.shape != W.shape:
        raise ValueError("W and G must have the same shape")
    r, n = W.shape
    keep = n - 2 * f
    if keep < 1:
        raise ValueError("need more than 2f values per row")
    ow = np.argsort(W, axis=1, kind="stable")
    og = np.argsort(G, axis=1, kind="stable")
    keep_w = ow[:, f:n - f].astype(np.intp)
    keep_g = og[:, f:n - f].astype(np.intp)
    rows = np.arange(r)
    s = np.zeros(r)
    for k in range(keep):
        s = s + W[rows, keep_w[:, k]]
    w_bar = s / keep
    g_mid = 0.5 * (G[rows, og[:, f]] + G[rows, og[:, n - f - 1]])
    return w_bar - lam * g_mid, w_bar, g_mid, keep_w, keep_g


def envelope_bounds(G, beta, gamma):
    G = np.asarray(G, dtype=np.float64)
    r, m = G.shape
    if m < 1 or gamma > m or gamma < 0:
        raise ValueError("need 0 <= gamma <= row length and a non-empty row")
    S = np.sort(G, axis=1, kind="stable")
    s_lo = np.zeros(r)
    s_hi = np.zeros(r)
    for k in range(gamma):
        s_lo = s_lo + S[:, k]
        s_hi = s_hi + S[:, m - 1 - k]
    rest = 1.0 - gamma * beta
    return beta * s_lo + rest * S[:, 0], beta * s_hi + rest * S[:, m - 1]


def displaced_mean(w, g, lam):
    if len(w) == 0 or len(g) != len(w):
        raise ValueError("need equally sized, non-empty w and g")
    s = 0.0
    for wi, gi in zip(w, g):
        s += float(wi) - lam * float(gi)
    return s / len(w)
