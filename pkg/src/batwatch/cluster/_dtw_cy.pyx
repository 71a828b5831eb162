# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled DTW kernel: two-row dynamic program over the squared-difference
local cost with an optional Sakoe-Chiba band (band < 0 means unconstrained).

Must stay numerically identical to batwatch.cluster._dtw_py.accumulated_cost;
the test suite runs the same oracle against both.
"""

import numpy as np

BACKEND_NAME = "cython"

cdef double INF = float("inf")


def accumulated_cost(double[::1] a, double[::1] b, long band=-1):
    """Accumulated cost of the optimal monotone alignment of a and b."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t i, j, lo, hi
    cdef double cost, best, up, left, diag, ai

    prev_arr = np.full(m, INF)
    cur_arr = np.full(m, INF)
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr

    for i in range(n):
        if band >= 0:
            lo = i - band if i - band > 0 else 0
            hi = i + band if i + band < m - 1 else m - 1
        else:
            lo = 0
            hi = m - 1
        for j in range(m):
            cur[j] = INF
        ai = a[i]
        for j in range(lo, hi + 1):
            cost = (ai - b[j]) * (ai - b[j])
            if i == 0 and j == 0:
                cur[j] = cost
                continue
            up = prev[j]
            left = cur[j - 1] if j > 0 else INF
            diag = prev[j - 1] if j > 0 else INF
            best = up
            if left < best:
                best = left
            if diag < best:
                best = diag
            cur[j] = cost + best
        prev, cur = cur, prev
    return float(prev[m - 1])
