"""Closed-form log-partition function of the Gaussian beta-ensemble.

``Z_N(alpha, beta) = alpha**-(N(N-1) beta / 4 + N/2) (2 pi)**(N/2)
prod_{j=1..N} Gamma(1 + j beta / 2) / Gamma(1 + beta / 2)``.

Log-gamma comes from :func:`scipy.special.gammaln`; sums of many terms
use :func:`math.fsum` so the N**2-sized total keeps its low-order digits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "PartitionQuery",
    "log_partition",
    "log_partition_ratio",
    "free_energy_density",
    "bounded_ratio_limit",
    "growing_ratio_limit",
    "FREE_ENERGY_LIMIT",
]

FREE_ENERGY_LIMIT = -3.0 / 8.0

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PartitionQuery:
    N: int
    alpha: float
    beta: float

    def __post_init__(self):
        _validate(self.N, self.alpha, self.beta)


def _validate(N, alpha, beta):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be finite and > 0, got {alpha}")
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")


def _log_partition(N: int, alpha: float, beta: float) -> float:
    j = np.arange(1, N + 1, dtype=np.float64)
    log_gammas = math.fsum(gammaln(1.0 + j * (beta / 2.0)))
    return (
        -(N * (N - 1) * beta / 4.0 + N / 2.0) * math.log(alpha)
        + (N / 2.0) * _LOG_2PI
        + log_gammas
        - N * float(gammaln(1.0 + beta / 2.0))
    )


def log_partition(q: PartitionQuery) -> float:
    """``log Z_N(alpha, beta)``."""
    return _log_partition(q.N, q.alpha, q.beta)


def log_partition_ratio(N: int, k: int, alpha: float, beta: float) -> float:
    """``log(Z_{N-k} / Z_N)`` from the telescoped product (only k terms)."""
    _validate(N, alpha, beta)
    if int(k) != k or not 0 <= k <= N:
        raise ValueError(f"k must satisfy 0 <= k <= N={N}, got {k}")
    if k == 0:
        return 0.0
    log_a = math.log(alpha)
    ell = np.arange(k, dtype=np.float64)
    tail = math.fsum(gammaln(1.0 + (N - ell) * (beta / 2.0)))
    return (
        (k / 2.0) * log_a
        + (beta / 4.0) * (2.0 * k * N - k * k - k) * log_a
        - (k / 2.0) * _LOG_2PI
        + k * float(gammaln(1.0 + beta / 2.0))
        - tail
    )


def free_energy_density(N: int, beta: float, alpha: float) -> float:
    """``log Z_N(alpha, beta) / (N**2 beta)``."""
    _validate(N, alpha, beta)
    if beta == 0:
        raise ValueError("free energy density is undefined at beta = 0")
    return _log_partition(N, alpha, beta) / (N * N * beta)


def bounded_ratio_limit(gamma: float, k: int = 1) -> float:
    """Log of the N -> oo limit of ``Z_{N-k}/Z_N`` when N beta -> 2 gamma, alpha -> gamma+1."""
    one = (gamma + 0.5) * math.log(gamma + 1.0) - 0.5 * _LOG_2PI - math.lgamma(gamma + 1.0)
    return k * one


def growing_ratio_limit(N: int, beta: float, k: int = 1) -> float:
    """Log of ``(exp(N beta / 2) / (2 pi))**k``, the asymptotic ratio when N beta -> oo."""
    return k * (N * beta / 2.0 - _LOG_2PI)
