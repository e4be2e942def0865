"""Pure numpy Sturm-sequence kernels.

Fallback for :mod:`betalab._sturm`. The recurrence is vectorized across
shifts and loops over matrix rows in Python, which keeps the floating-point
operation order identical to the compiled kernel.
"""
import numpy as np


def _guard(d, pivmin):
    return np.where(np.abs(d) < pivmin, -pivmin, d)


def sturm_count(diag, offsq, x, pivmin):
    """Number of eigenvalues <= x."""
    d = diag[0] - x
    if abs(d) < pivmin:
        d = -pivmin
    cnt = int(d < 0.0)
    for i in range(1, diag.shape[0]):
        d = (diag[i] - x) - offsq[i - 1] / d
        if abs(d) < pivmin:
            d = -pivmin
        cnt += d < 0.0
    return int(cnt)


def sturm_counts(diag, offsq, xs, pivmin):
    """Vector of eigenvalue counts <= xs[s], one pass over the matrix."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        return np.zeros(0, dtype=np.int64)
    d = _guard(diag[0] - xs, pivmin)
    cnt = (d < 0.0).astype(np.int64)
    for i in range(1, diag.shape[0]):
        d = _guard((diag[i] - xs) - offsq[i - 1] / d, pivmin)
        cnt += d < 0.0
    return cnt


def bisect_brackets(diag, offsq, lo, hi, tol, pivmin):
    """Shrink every bracket (lo[j], hi[j]] around eigenvalue j to width <= tol."""
    idx = np.flatnonzero(hi - lo > tol)
    while idx.size:
        a, b = lo[idx], hi[idx]
        mid = 0.5 * (a + b)
        cnt = sturm_counts(diag, offsq, mid, pivmin)
        moved = (mid > a) & (mid < b)
        up = moved & (cnt >= idx + 1)
        down = moved & ~up
        hi[idx[up]] = mid[up]
        lo[idx[down]] = mid[down]
        idx = idx[moved & (hi[idx] - lo[idx] > tol)]
    return 0.5 * (lo + hi)
