"""Seeded sampling of the tridiagonal beta-ensemble.

The matrix is ``H = T / sqrt(alpha)`` with ``T`` symmetric tridiagonal,
``T_ii = g_i ~ N(0, 1)`` and ``T_{i,i+1} = sqrt(Y_{i+1})``,
``Y_{i+1} ~ Gamma(i * beta / 2)``, all independent. Its eigenvalues have
joint density proportional to
``|Delta(lambda)|**beta * exp(-alpha / 2 * sum(lambda**2))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .tridiag import SpectrumSample, TridiagonalSym, eigenvalues

__all__ = [
    "EnsembleParams",
    "RngStream",
    "sample_gaussian",
    "sample_gamma",
    "log_gamma_variates",
    "sample_ensemble",
    "sample_spectrum",
    "sample_spectra",
    "map_replicas",
]

REGIMES = ("fixed_gamma", "beta_exponent", "explicit")


@dataclass(frozen=True)
class EnsembleParams:
    """Ensemble knobs: size ``N``, inverse temperature ``beta``, weight ``alpha``.

    Use the constructors :meth:`fixed_gamma`, :meth:`beta_exponent` and
    :meth:`explicit` rather than the raw initializer.
    """

    N: int
    beta: float
    alpha: float
    regime: str = "explicit"
    gamma: float | None = None
    exponent: float | None = None
    alpha_offset: float | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")

    @classmethod
    def fixed_gamma(cls, N: int, gamma: float) -> "EnsembleParams":
        """Bounded regime: ``beta = 2 gamma / N`` and ``alpha = gamma + 1``."""
        if not (math.isfinite(gamma) and gamma >= 0):
            raise ValueError(f"gamma must be finite and >= 0, got {gamma}")
        return cls(int(N), 2.0 * gamma / N, gamma + 1.0, "fixed_gamma", gamma=float(gamma))

    @classmethod
    def beta_exponent(cls, N: int, c: float, alpha_offset: float = 1.0) -> "EnsembleParams":
        """Growing regime: ``beta = N**c`` and ``alpha = N beta / 2 + alpha_offset``.

        ``alpha_offset=1`` matches the bounded-regime normalization (unit
        second moment); ``alpha_offset=0`` is the normalization under which
        the spectrum approaches the semicircle with the ``nu`` correction.
        """
        if not -1.0 < c < 0.0:
            raise ValueError(f"exponent c must lie in (-1, 0), got {c}")
        beta = float(N) ** c
        return cls(
            int(N),
            beta,
            N * beta / 2.0 + alpha_offset,
            "beta_exponent",
            exponent=float(c),
            alpha_offset=float(alpha_offset),
        )

    @classmethod
    def explicit(cls, N: int, beta: float, alpha: float) -> "EnsembleParams":
        return cls(int(N), float(beta), float(alpha), "explicit")

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "beta": self.beta,
            "alpha": self.alpha,
            "regime": self.regime,
            "gamma": self.gamma,
            "exponent": self.exponent,
            "alpha_offset": self.alpha_offset,
        }


@dataclass
class RngStream:
    """Random stream keyed by ``(seed, replica_id)``.

    Backed by a Philox counter-based generator whose key is derived from
    ``SeedSequence(seed, spawn_key=(replica_id,))``, so distinct replicas
    never share state and each stream is reproducible on its own.
    """

    seed: int
    replica_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.replica_id < 0:
            raise ValueError(f"replica_id must be >= 0, got {self.replica_id}")
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.replica_id),))
        self._gen = np.random.Generator(np.random.Philox(ss))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def sample_gaussian(stream: RngStream) -> float:
    return float(stream.generator.standard_normal())


def log_gamma_variates(shape, rng: np.random.Generator) -> np.ndarray:
    """Logarithms of independent Gamma(shape) draws (rate 1).

    Shape 0 gives ``-inf`` (the point mass at 0). Shapes below 1 use the
    boost ``Y = G * U**(1/shape)`` with ``G ~ Gamma(shape + 1)`` and the
    power taken in log space, so ``log Y`` stays finite even when ``Y``
    itself is below the smallest double. Shapes >= 1 go straight to
    numpy's Marsaglia-Tsang sampler.

    Exactly one gamma and one uniform draw are consumed per entry whatever
    the shapes, which keeps the stream layout independent of the values.
    """
    shape = np.asarray(shape, dtype=np.float64)
    if not np.all(np.isfinite(shape)) or np.any(shape < 0):
        raise ValueError("gamma shape must be finite and >= 0")
    small = shape < 1.0
    g = rng.standard_gamma(np.where(small, shape + 1.0, shape))
    u = 1.0 - rng.random(shape.shape)  # in (0, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(g)
        boosted = out + np.log(u) / shape
    out = np.where(small, boosted, out)
    return np.where(shape == 0.0, -np.inf, out)


def sample_gamma(shape: float, stream: RngStream) -> float:
    """One Gamma(shape) draw; ``shape == 0`` returns exactly 0."""
    if not (math.isfinite(shape) and shape >= 0):
        raise ValueError(f"gamma shape must be finite and >= 0, got {shape}")
    return float(np.exp(log_gamma_variates(np.array([shape]), stream.generator)[0]))


def sample_ensemble(params: EnsembleParams, stream: RngStream) -> TridiagonalSym:
    """Draw one tridiagonal matrix H for ``params``."""
    n = params.N
    rng = stream.generator
    scale = 1.0 / math.sqrt(params.alpha)
    g = rng.standard_normal(n)
    shapes = np.arange(1, n) * (params.beta / 2.0)
    log_y = log_gamma_variates(shapes, rng)
    # sqrt taken in log space: sqrt(Y) survives where Y would underflow
    off = np.exp(0.5 * log_y) * scale
    return TridiagonalSym(g * scale, off)


def sample_spectrum(
    params: EnsembleParams, stream: RngStream, tol: float | None = None
) -> SpectrumSample:
    T = sample_ensemble(params, stream)
    return SpectrumSample(eigenvalues(T, tol), params, stream.replica_id)


def _replica_spectrum(replica_id, params, seed, tol):
    return sample_spectrum(params, RngStream(seed, replica_id), tol)


def map_replicas(
    fn: Callable[[int], object], replica_ids: Sequence[int], workers: int = 1
) -> list:
    """Apply ``fn`` to each replica id, results in ``replica_ids`` order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    ids = list(replica_ids)
    if workers == 1 or len(ids) <= 1:
        return [fn(r) for r in ids]
    chunk = max(1, len(ids) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ids, chunksize=chunk))


def sample_spectra(
    params: EnsembleParams,
    seed: int,
    replicas: int,
    tol: float | None = None,
    workers: int = 1,
    first_replica: int = 0,
) -> list[SpectrumSample]:
    """Spectra for replicas ``first_replica .. first_replica + replicas - 1``."""
    fn = partial(_replica_spectrum, params=params, seed=seed, tol=tol)
    return map_replicas(fn, range(first_replica, first_replica + replicas), workers)
