# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Sturm-sequence kernels.

Same arithmetic as :mod:`betalab._sturm_py`, operation for operation, so the
two backends return bit-identical counts and eigenvalues.
"""
import numpy as np

from libc.math cimport fabs


cdef inline Py_ssize_t _count_one(const double[::1] diag, const double[::1] offsq,
                                  double x, double pivmin) noexcept nogil:
    cdef Py_ssize_t i, n = diag.shape[0]
    cdef Py_ssize_t cnt = 0
    cdef double d = diag[0] - x
    if fabs(d) < pivmin:
        d = -pivmin
    if d < 0.0:
        cnt += 1
    for i in range(1, n):
        d = (diag[i] - x) - offsq[i - 1] / d
        if fabs(d) < pivmin:
            d = -pivmin
        if d < 0.0:
            cnt += 1
    return cnt


cdef extern from "_sturm_core.h":
    void sturm_count_many(const double* diag, const double* offsq, Py_ssize_t n,
                          const double* x, double* d, double* cnt,
                          Py_ssize_t m, double pivmin) noexcept nogil


cdef inline void _count_many(const double[::1] diag, const double[::1] offsq,
                             const double* x, double* d, double* cnt,
                             Py_ssize_t m, double pivmin) noexcept nogil:
    cdef const double* off = &offsq[0] if offsq.shape[0] > 0 else NULL
    sturm_count_many(&diag[0], off, diag.shape[0], x, d, cnt, m, pivmin)


def sturm_count(const double[::1] diag, const double[::1] offsq, double x, double pivmin):
    """Number of eigenvalues <= x."""
    return _count_one(diag, offsq, x, pivmin)


def sturm_counts(const double[::1] diag, const double[::1] offsq,
                 const double[::1] xs, double pivmin):
    """Vector of eigenvalue counts <= xs[s], one pass over the matrix."""
    cdef Py_ssize_t m = xs.shape[0]
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    cdef double[::1] cnt = np.empty(m, dtype=np.float64)
    cdef double[::1] d = np.empty(m, dtype=np.float64)
    with nogil:
        _count_many(diag, offsq, &xs[0], &d[0], &cnt[0], m, pivmin)
    return np.asarray(cnt).astype(np.int64)


def bisect_brackets(const double[::1] diag, const double[::1] offsq,
                    double[::1] lo, double[::1] hi, double tol, double pivmin):
    """Shrink every bracket (lo[j], hi[j]] around eigenvalue j to width <= tol.

    Eigenvalue j (0-based, ascending) is kept inside its bracket by the
    invariant count(lo[j]) <= j < count(hi[j]). All unconverged brackets
    are bisected in lockstep, one matrix pass per round.
    """
    cdef Py_ssize_t n = lo.shape[0]
    cdef Py_ssize_t m, s, j, keep
    cdef double mid
    cdef long long[::1] idx = np.arange(n, dtype=np.int64)
    cdef double[::1] x = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] d = np.empty(max(n, 1), dtype=np.float64)
    cdef double[::1] cnt = np.empty(max(n, 1), dtype=np.float64)
    with nogil:
        m = 0
        for j in range(n):
            if hi[j] - lo[j] > tol:
                idx[m] = j
                m += 1
        while m > 0:
            for s in range(m):
                j = idx[s]
                x[s] = 0.5 * (lo[j] + hi[j])
            _count_many(diag, offsq, &x[0], &d[0], &cnt[0], m, pivmin)
            keep = 0
            for s in range(m):
                j = idx[s]
                mid = x[s]
                if mid <= lo[j] or mid >= hi[j]:
                    continue
                if cnt[s] >= <double>(j + 1):
                    hi[j] = mid
                else:
                    lo[j] = mid
                if hi[j] - lo[j] > tol:
                    idx[keep] = j
                    keep += 1
            m = keep
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    for j in range(n):
        res[j] = 0.5 * (lo[j] + hi[j])
    return out
