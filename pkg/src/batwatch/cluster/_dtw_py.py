"""Pure-NumPy DTW kernel, the import-time fallback for the compiled one.

Sweeps anti-diagonals so each step is a vector operation: cells on
diagonal d depend only on diagonals d-1 and d-2.  Rows are indexed by
the absolute first-sequence position with inf padding outside the
diagonal, which keeps the band bookkeeping trivial.

Must stay numerically identical to batwatch.cluster._dtw_cy; the test
suite runs the same oracle against both.
"""

import numpy as np

BACKEND_NAME = "python"

_INF = np.inf


def _shifted(arr, positions):
    out = np.full(positions.shape, _INF)
    valid = positions >= 0
    out[valid] = arr[positions[valid]]
    return out


def accumulated_cost(a, b, band=-1):
    """Accumulated cost of the optimal monotone alignment of a and b."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    prev = np.full(n, _INF)  # diagonal d-1, absolute i indexing
    prev2 = np.full(n, _INF)  # diagonal d-2
    cur = np.full(n, _INF)
    for d in range(n + m - 1):
        i0 = max(0, d - (m - 1))
        i1 = min(n - 1, d)
        if band >= 0:
            # |i - (d - i)| <= band
            i0 = max(i0, (d - band + 1) // 2)
            i1 = min(i1, (d + band) // 2)
        cur[:] = _INF
        if i0 <= i1:
            idx = np.arange(i0, i1 + 1)
            cost = (a[idx] - b[d - idx]) ** 2
            if d == 0:
                cur[0] = cost[0]
            else:
                up = _shifted(prev, idx - 1)  # cell (i-1, j)
                left = prev[idx]  # cell (i, j-1)
                diag = _shifted(prev2, idx - 1)  # cell (i-1, j-1)
                cur[idx] = cost + np.minimum(np.minimum(up, left), diag)
        prev2, prev, cur = prev, cur, prev2
    return float(prev[n - 1])
