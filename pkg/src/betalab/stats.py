"""Monte Carlo estimators and goodness-of-fit tests on sampled spectra.

Estimators take lists of :class:`~betalab.tridiag.SpectrumSample` (or of
:class:`LocalProcess`) and reduce over replicas in list order, so results
do not depend on how the replicas were scheduled.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats as sps
from scipy.special import logsumexp

from . import analytic
from .tridiag import SpectrumSample, TridiagonalSym, sturm_counts_leq

__all__ = [
    "LocalProcess",
    "SpacingSample",
    "CorrelationEstimate",
    "WindowCounts",
    "LinearStatistic",
    "HistogramDensity",
    "local_process",
    "local_processes",
    "unfolded_spacings",
    "pooled_spacings",
    "ks_exponential",
    "spacing_histogram",
    "counting_statistics",
    "poisson_chi2_test",
    "dispersion_test",
    "correlation_estimate",
    "default_boxes",
    "log_potential_mu_gamma",
    "estimate_theta_bounded",
    "empirical_stieltjes",
    "stieltjes_replica_means",
    "linear_statistic",
    "linear_statistic_bootstrap_se",
    "tail_frequency",
    "wilson_interval",
    "pooled_moment",
    "window_fraction",
    "empirical_intensity",
    "synthetic_poisson_processes",
]


# ---------------------------------------------------------------------------
# local point process


@dataclass(frozen=True, eq=False)
class LocalProcess:
    """Rescaled points ``N (lambda_i - E)`` inside ``[-W, W]``."""

    points: np.ndarray
    E: float
    N: int
    W: float

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=np.float64))
        if pts.size and np.abs(pts).max() > self.W:
            raise ValueError("all points must lie in [-W, W]")
        object.__setattr__(self, "points", pts)

    def count(self, a: float, b: float) -> int:
        """Points in the closed interval [a, b]."""
        lo = np.searchsorted(self.points, a, side="left")
        hi = np.searchsorted(self.points, b, side="right")
        return int(hi - lo)


def local_process(s: SpectrumSample, E: float, W: float) -> LocalProcess:
    if not W > 0:
        raise ValueError(f"window half-width must be positive, got {W}")
    n = s.n
    x = n * (s.eigenvalues - E)
    return LocalProcess(x[np.abs(x) <= W], float(E), n, float(W))


def local_processes(spectra: Sequence[SpectrumSample], E: float, W: float) -> list[LocalProcess]:
    return [local_process(s, E, W) for s in spectra]


def synthetic_poisson_processes(
    intensity: float, W: float, replicas: int, rng: np.random.Generator, N: int = 1
) -> list[LocalProcess]:
    """Homogeneous Poisson processes on [-W, W], for null calibration."""
    out = []
    for _ in range(replicas):
        k = rng.poisson(intensity * 2.0 * W)
        out.append(LocalProcess(rng.uniform(-W, W, size=k), 0.0, N, W))
    return out


def empirical_intensity(processes: Sequence[LocalProcess], a: float, b: float):
    """Mean points per unit length in [a, b], with its replica standard error."""
    c = np.array([p.count(a, b) for p in processes], dtype=np.float64)
    width = b - a
    return c.mean() / width, c.std(ddof=1) / math.sqrt(c.size) / width


# ---------------------------------------------------------------------------
# spacings


class HistogramDensity:
    """Density estimate from a fine histogram of pooled eigenvalues.

    Bin densities sit at bin centers and are linearly interpolated; zero
    outside the sampled range.
    """

    def __init__(self, spectra: Sequence[SpectrumSample], bins: int = 400, trim: float = 0.0):
        pool = np.concatenate([s.eigenvalues for s in spectra])
        if trim:
            lo, hi = np.quantile(pool, [trim, 1.0 - trim])
        else:
            lo, hi = pool.min(), pool.max()
        counts, edges = np.histogram(pool, bins=bins, range=(lo, hi))
        self.edges = edges
        self.centers = 0.5 * (edges[:-1] + edges[1:])
        self.values = counts / (pool.size * np.diff(edges))

    def __call__(self, x):
        return np.interp(x, self.centers, self.values, left=0.0, right=0.0)


SPACING_MODES = ("semicircle_unfold", "mu_gamma_unfold", "unit_mean_rescale")


@dataclass(frozen=True, eq=False)
class SpacingSample:
    spacings: np.ndarray
    normalization: str
    rescaled: bool

    def __post_init__(self):
        sp = np.asarray(self.spacings, dtype=np.float64)
        if np.any(sp < 0):
            raise ValueError("spacings must be non-negative")
        object.__setattr__(self, "spacings", sp)


def unfolded_spacings(
    s: SpectrumSample,
    mode: str = "semicircle_unfold",
    bulk_trim: float = 0.05,
    density: Callable | None = None,
    rescale: bool = True,
) -> SpacingSample:
    """Gaps ``N rho(lambda_k) (lambda_{k+1} - lambda_k)`` over the central bulk.

    ``mode`` picks rho: the semicircle density (indices with
    ``|lambda_k| >= 2`` dropped), a supplied ``density`` for
    ``mu_gamma_unfold`` (typically a :class:`HistogramDensity`), or none
    at all for ``unit_mean_rescale``. With ``rescale`` (always on for
    ``unit_mean_rescale``) spacings are divided by their sample mean.
    """
    if mode not in SPACING_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {SPACING_MODES}")
    if not 0.0 <= bulk_trim < 0.5:
        raise ValueError(f"bulk_trim must be in [0, 1/2), got {bulk_trim}")
    ev = s.eigenvalues
    n = ev.size
    first = int(math.ceil(bulk_trim * n))
    last = min(n - 1, int(math.floor((1.0 - bulk_trim) * n)))
    if last - first < 1:
        raise ValueError("fewer than 2 eigenvalues retained after trimming")
    lam = ev[first:last]
    gaps = ev[first + 1:last + 1] - lam
    if mode == "semicircle_unfold":
        keep = np.abs(lam) < 2.0
        lam, gaps = lam[keep], gaps[keep]
        sp = n * analytic.semicircle_density(lam) * gaps
    elif mode == "mu_gamma_unfold":
        if density is None:
            raise ValueError("mu_gamma_unfold needs a density estimate")
        sp = n * np.asarray(density(lam)) * gaps
    else:
        sp = gaps
        rescale = True
    if sp.size == 0:
        raise ValueError("no spacings retained")
    if rescale:
        sp = sp / sp.mean()
    return SpacingSample(sp, mode, rescale)


def pooled_spacings(
    spectra: Sequence[SpectrumSample],
    mode: str = "mu_gamma_unfold",
    bulk_trim: float = 0.05,
    density: Callable | None = None,
    rescale: bool = True,
) -> np.ndarray:
    """Concatenated unfolded spacings; ``mu_gamma_unfold`` builds its density from ``spectra``."""
    if mode == "mu_gamma_unfold" and density is None:
        density = HistogramDensity(spectra)
    return np.concatenate(
        [unfolded_spacings(s, mode, bulk_trim, density, rescale).spacings for s in spectra]
    )


def ks_exponential(spacings) -> tuple[float, float]:
    """KS distance to Exp(1) and its asymptotic p-value."""
    res = sps.kstest(np.asarray(spacings), "expon", method="asymp")
    return float(res.statistic), float(res.pvalue)


def spacing_histogram(spacings, bins: int = 50, upper: float = 5.0) -> list[tuple]:
    """Rows ``(bin_left, bin_right, count, expected_exp1)``."""
    sp = np.asarray(spacings)
    edges = np.linspace(0.0, upper, bins + 1)
    counts, _ = np.histogram(sp, bins=edges)
    expected = sp.size * (np.exp(-edges[:-1]) - np.exp(-edges[1:]))
    return [
        (float(a), float(b), int(c), float(e))
        for a, b, c, e in zip(edges[:-1], edges[1:], counts, expected)
    ]


# ---------------------------------------------------------------------------
# counting statistics


@dataclass(frozen=True, eq=False)
class WindowCounts:
    interval: tuple[float, float]
    counts: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.counts.mean())

    @property
    def variance(self) -> float:
        return float(self.counts.var(ddof=1))

    @property
    def dispersion(self) -> float:
        return self.variance / self.mean

    def histogram(self) -> np.ndarray:
        """``histogram()[j]`` replicas with exactly j points."""
        return np.bincount(self.counts)


def counting_statistics(
    processes: Sequence[LocalProcess], subwindows: Sequence[tuple[float, float]]
) -> list[WindowCounts]:
    out = []
    for a, b in subwindows:
        for p in processes[:1]:
            if a < -p.W or b > p.W:
                raise ValueError(f"subwindow [{a}, {b}] exceeds the window [-{p.W}, {p.W}]")
        counts = np.array([p.count(a, b) for p in processes], dtype=np.int64)
        out.append(WindowCounts((float(a), float(b)), counts))
    return out


def poisson_chi2_test(counts, min_expected: float = 5.0) -> tuple[float, float, int]:
    """Chi-square fit of counts to a Poisson law with fitted mean.

    Cells are ``0, 1, ...`` with the upper tail pooled into the last cell;
    small-expectation cells are merged until each expects at least
    ``min_expected``. Returns ``(statistic, p_value, dof)``.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = counts.size
    lam = counts.mean()
    kmax = int(counts.max())
    obs = np.bincount(counts, minlength=kmax + 1).astype(np.float64)
    probs = sps.poisson.pmf(np.arange(kmax + 1), lam)
    probs[-1] = sps.poisson.sf(kmax - 1, lam)
    exp = n * probs
    # merge from the right, then from the left, until every cell expects enough
    cells_o, cells_e = list(obs), list(exp)
    while len(cells_e) > 1 and cells_e[-1] < min_expected:
        e, o = cells_e.pop(), cells_o.pop()
        cells_e[-1] += e
        cells_o[-1] += o
    while len(cells_e) > 1 and cells_e[0] < min_expected:
        e, o = cells_e.pop(0), cells_o.pop(0)
        cells_e[0] += e
        cells_o[0] += o
    cells_o, cells_e = np.array(cells_o), np.array(cells_e)
    dof = cells_e.size - 2
    if dof < 1:
        return 0.0, 1.0, 0
    stat = float(((cells_o - cells_e) ** 2 / cells_e).sum())
    return stat, float(sps.chi2.sf(stat, dof)), dof


def dispersion_test(counts) -> tuple[float, float]:
    """Two-sided Poisson dispersion test: ``sum (c - mean)^2 / mean ~ chi2(n - 1)``."""
    c = np.asarray(counts, dtype=np.float64)
    n = c.size
    m = c.mean()
    if m == 0:
        return 1.0, 1.0
    stat = float(((c - m) ** 2).sum() / m)
    lower = sps.chi2.cdf(stat, n - 1)
    return stat / (n - 1), float(min(1.0, 2.0 * min(lower, 1.0 - lower)))


# ---------------------------------------------------------------------------
# correlation functions


@dataclass(frozen=True, eq=False)
class CorrelationEstimate:
    k: int
    boxes: list
    estimates: np.ndarray
    std_errors: np.ndarray
    replicas: int


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _distinct_tuple_counts(points: np.ndarray, box) -> int:
    """Ordered k-tuples of distinct points with the j-th point in ``box[j]``.

    Inclusion-exclusion over set partitions of the k slots, with Moebius
    weights ``prod (-1)^(|b|-1) (|b|-1)!``.
    """
    k = len(box)
    total = 0
    for part in _set_partitions(list(range(k))):
        term = 1
        for block in part:
            a = max(box[j][0] for j in block)
            b = min(box[j][1] for j in block)
            n = 0 if a >= b else int(np.count_nonzero((points >= a) & (points < b)))
            term *= (-1) ** (len(block) - 1) * math.factorial(len(block) - 1) * n
            if term == 0:
                break
        total += term
    return total


def default_boxes(k: int, W: float = 4.0, width: float = 1.0):
    """All k-tuples of the unit boxes tiling [-W, W]."""
    edges = np.arange(-W, W + 1e-12, width)
    unit = [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    return [tuple(t) for t in itertools.product(unit, repeat=k)]


def correlation_estimate(processes: Sequence[LocalProcess], k: int, boxes=None) -> CorrelationEstimate:
    """Factorial-moment density of order k on each box ``B_1 x ... x B_k``.

    Boxes are half-open ``[a, b)`` per coordinate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if boxes is None:
        boxes = default_boxes(k)
    boxes = [tuple(tuple(map(float, iv)) for iv in box) for box in boxes]
    for box in boxes:
        if len(box) != k:
            raise ValueError(f"box {box} does not have {k} intervals")
    r = len(processes)
    est = np.empty(len(boxes))
    se = np.empty(len(boxes))
    for i, box in enumerate(boxes):
        vol = math.prod(b - a for a, b in box)
        c = np.array([_distinct_tuple_counts(p.points, box) for p in processes], dtype=np.float64)
        est[i] = c.mean() / vol
        se[i] = (c.std(ddof=1) / math.sqrt(r) / vol) if r > 1 else math.inf
    return CorrelationEstimate(k, boxes, est, se, r)


# ---------------------------------------------------------------------------
# global statistics


def _replica_means(spectra, f):
    return np.array([np.mean(f(s.eigenvalues)) for s in spectra])


def _mean_se(values):
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("no replicas")
    se = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else math.inf
    return float(values.mean()), float(se)


def pooled_moment(spectra: Sequence[SpectrumSample], k: int) -> tuple[float, float]:
    """``N^-1 sum lambda_i^k`` averaged over replicas, with replica standard error."""
    return _mean_se(_replica_means(spectra, lambda ev: ev**k))


def window_fraction(spectra: Sequence[SpectrumSample], a: float, eps: float) -> tuple[float, float]:
    """Fraction of eigenvalues in ``(a - eps, a + eps)``."""
    return _mean_se(_replica_means(spectra, lambda ev: np.abs(ev - a) < eps))


def log_potential_mu_gamma(
    spectra: Sequence[SpectrumSample], E: float, delta: float | None = None
) -> tuple[float, float]:
    """Estimate ``int log|E - x| dmu(x)`` by pooling ``log|E - lambda_i|``.

    ``delta`` optionally floors ``|E - lambda|`` at a small value; off by
    default since the singularity is integrable.
    """
    if not spectra:
        raise ValueError("empty spectra list")

    def f(ev):
        d = np.abs(E - ev)
        if delta is not None:
            d = np.maximum(d, delta)
        with np.errstate(divide="ignore"):
            return np.log(d)

    return _mean_se(_replica_means(spectra, f))


@lru_cache(maxsize=32)
def estimate_theta_bounded(
    E: float, gamma: float, N: int = 4000, replicas: int = 200, seed: int = 0, workers: int = 1
) -> tuple[float, float]:
    """Bounded-regime intensity at E with its log-potential estimated by sampling.

    Returns ``(theta, std_error)``, the error propagated from the log
    potential. Cached per argument tuple.
    """
    from .sampling import EnsembleParams, sample_spectra

    params = EnsembleParams.fixed_gamma(N, gamma)
    spectra = sample_spectra(params, seed, replicas, workers=workers)
    lp, lp_se = log_potential_mu_gamma(spectra, E)
    theta = analytic.theta_bounded_regime(E, gamma, lp)
    return theta, theta * 2.0 * gamma * lp_se


def stieltjes_replica_means(spectra: Sequence[SpectrumSample], z) -> np.ndarray:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"z must lie in the open upper half-plane, got {z}")
    return np.array([np.mean(1.0 / (z - s.eigenvalues)) for s in spectra])


def empirical_stieltjes(spectra: Sequence[SpectrumSample], z) -> complex:
    """Monte Carlo estimate of ``E[N^-1 sum 1/(z - lambda_i)]``."""
    return complex(stieltjes_replica_means(spectra, z).mean())


class LinearStatistic(NamedTuple):
    lhs: float
    rhs: float


def _lhs_terms(spectra, h, beta):
    return np.array([beta * np.sum(h(s.eigenvalues)) for s in spectra])


def _params_of(spectra):
    p = spectra[0].params
    if p is None:
        raise ValueError("spectra must carry their EnsembleParams")
    return p


def linear_statistic(spectra: Sequence[SpectrumSample], h: Callable, tol: float = 1e-10) -> LinearStatistic:
    """Compare ``log E exp(beta sum h(lambda_j)) - N beta int h dsigma`` with ``int h dnu``.

    ``h`` must accept numpy arrays. The expectation is the replica mean,
    taken in log-sum-exp form.
    """
    p = _params_of(spectra)
    terms = _lhs_terms(spectra, h, p.beta)
    log_mean = float(logsumexp(terms) - math.log(terms.size))
    scalar = lambda x: float(h(np.array([x]))[0])  # noqa: E731
    lhs = log_mean - p.N * p.beta * analytic.semicircle_integral(scalar, tol=tol)
    return LinearStatistic(lhs, analytic.nu_integral(scalar, tol=tol))


def linear_statistic_bootstrap_se(
    spectra: Sequence[SpectrumSample], h: Callable, n_boot: int = 1000, seed: int = 0
) -> float:
    """Bootstrap standard error of the log-mean-exp part of the left side."""
    p = _params_of(spectra)
    terms = _lhs_terms(spectra, h, p.beta)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, terms.size, size=(n_boot, terms.size))
    boots = logsumexp(terms[idx], axis=1) - math.log(terms.size)
    return float(boots.std(ddof=1))


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _max_abs_exceeds(item, thresholds):
    if isinstance(item, SpectrumSample):
        m = np.abs(item.eigenvalues).max()
        return m >= thresholds
    if isinstance(item, TridiagonalSym):
        # |lambda|max >= x  iff  some eigenvalue <= -x or some eigenvalue >= x
        below = sturm_counts_leq(item, -thresholds) > 0
        at_or_above = sturm_counts_leq(item, np.nextafter(thresholds, -np.inf)) < item.n
        return below | at_or_above
    raise TypeError(f"expected SpectrumSample or TridiagonalSym, got {type(item).__name__}")


def tail_frequency(items, thresholds, z: float = 1.959963984540054) -> list[tuple[float, float, float, float]]:
    """Rows ``(x, frequency, wilson_low, wilson_high)`` for ``P(max|lambda_i| >= x)``.

    Items may be spectra or matrices; matrices are probed with two Sturm
    counts per threshold instead of a full diagonalization.
    """
    thresholds = np.asarray(thresholds, dtype=np.float64)
    hits = np.zeros(thresholds.size, dtype=np.int64)
    n = 0
    for item in items:
        hits += _max_abs_exceeds(item, thresholds)
        n += 1
    rows = []
    for x, h in zip(thresholds, hits):
        lo, hi = wilson_interval(int(h), n, z)
        rows.append((float(x), h / n if n else float("nan"), lo, hi))
    return rows
