"""Symmetric tridiagonal matrices, Sturm counts and a bisection eigensolver."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from ._backend import kernels

if TYPE_CHECKING:
    from .sampling import EnsembleParams

__all__ = [
    "TridiagonalSym",
    "SpectrumSample",
    "gershgorin_bound",
    "sturm_count_leq",
    "sturm_counts_leq",
    "eigenvalues",
    "count_in_interval",
    "default_tol",
]

_SAFE_MIN = np.finfo(np.float64).tiny


@dataclass(frozen=True, eq=False)
class TridiagonalSym:
    """Real symmetric tridiagonal matrix stored as its two bands."""

    diag: np.ndarray
    offdiag: np.ndarray
    _offsq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        diag = np.ascontiguousarray(self.diag, dtype=np.float64)
        off = np.ascontiguousarray(self.offdiag, dtype=np.float64)
        if diag.ndim != 1 or off.ndim != 1:
            raise ValueError("diag and offdiag must be one-dimensional")
        if diag.size == 0:
            raise ValueError("matrix must have at least one row")
        if off.size != diag.size - 1:
            raise ValueError(
                f"offdiag has length {off.size}, expected {diag.size - 1}"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
            raise ValueError("matrix entries must be finite")
        diag.flags.writeable = False
        off.flags.writeable = False
        offsq = off * off
        offsq.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)
        object.__setattr__(self, "_offsq", offsq)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def pivmin(self) -> float:
        """Smallest pivot magnitude allowed in the Sturm recurrence."""
        m = float(self._offsq.max()) if self._offsq.size else 0.0
        return _SAFE_MIN * max(1.0, m)


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    """Sorted eigenvalues of one sampled replica."""

    eigenvalues: np.ndarray
    params: "EnsembleParams | None" = None
    replica_id: int = 0

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        if ev.ndim != 1:
            raise ValueError("eigenvalues must be one-dimensional")
        if ev.size > 1 and np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        ev.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def gershgorin_bound(T: TridiagonalSym) -> float:
    """Upper bound on the spectral radius from Gershgorin discs."""
    r = np.abs(T.diag).copy()
    a = np.abs(T.offdiag)
    r[:-1] += a
    r[1:] += a
    return float(r.max())


def default_tol(T: TridiagonalSym) -> float:
    return 1e-12 * max(1.0, gershgorin_bound(T))


def sturm_count_leq(T: TridiagonalSym, x: float) -> int:
    """Number of eigenvalues of T that are <= x."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"probe point must be finite, got {x}")
    return int(kernels.sturm_count(T.diag, T._offsq, x, T.pivmin()))


def sturm_counts_leq(T: TridiagonalSym, xs) -> np.ndarray:
    """Vectorized :func:`sturm_count_leq` over many probe points."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if not np.all(np.isfinite(xs)):
        raise ValueError("probe points must be finite")
    return kernels.sturm_counts(T.diag, T._offsq, xs.ravel(), T.pivmin()).reshape(xs.shape)


def count_in_interval(T: TridiagonalSym, a: float, b: float) -> int:
    """Number of eigenvalues in the half-open interval (a, b]."""
    if a > b:
        raise ValueError(f"empty interval: a={a} > b={b}")
    return sturm_count_leq(T, b) - sturm_count_leq(T, a)


def _block_eigenvalues(diag, offsq, tol, pivmin, backend=None):
    k = kernels if backend is None else backend
    n = diag.size
    if n == 1:
        return diag.copy()
    r = np.abs(diag).copy()
    off = np.sqrt(offsq)
    r[:-1] += off
    r[1:] += off
    bound = float(r.max())
    width = 2.0 * bound + 2.0 * tol + 4.0 * pivmin
    lo_all = -bound - tol - 2.0 * pivmin
    # coarse slicing pass: one multi-shift sweep brackets every eigenvalue
    # to a grid cell, then lockstep bisection refines the cells
    m = max(16, n)
    grid = lo_all + width * (np.arange(m + 1) / m)
    counts = k.sturm_counts(diag, offsq, grid, pivmin)
    counts[0] = 0
    counts[-1] = n
    cell = np.searchsorted(counts, np.arange(n), side="right") - 1
    lo = np.ascontiguousarray(grid[cell])
    hi = np.ascontiguousarray(grid[cell + 1])
    return k.bisect_brackets(diag, offsq, lo, hi, tol, pivmin)


def eigenvalues(T: TridiagonalSym, tol: float | None = None) -> np.ndarray:
    """All eigenvalues of T, ascending, each bisected to width <= tol.

    The matrix is split into independent blocks at exact zeros of the
    off-diagonal; 1x1 blocks return their diagonal entry exactly.
    """
    if tol is None:
        tol = default_tol(T)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    tol = float(tol)
    pivmin = T.pivmin()
    cuts = np.flatnonzero(T.offdiag == 0.0) + 1
    if cuts.size == 0:
        vals = _block_eigenvalues(T.diag, T._offsq, tol, pivmin)
    else:
        bounds = np.concatenate(([0], cuts, [T.n]))
        parts = []
        for s, e in zip(bounds[:-1], bounds[1:]):
            if e - s == 1:
                parts.append(T.diag[s:e].copy())
            else:
                parts.append(
                    _block_eigenvalues(
                        np.ascontiguousarray(T.diag[s:e]),
                        np.ascontiguousarray(T._offsq[s:e - 1]),
                        tol,
                        pivmin,
                    )
                )
        vals = np.concatenate(parts)
    return np.sort(vals)
