"""Numerical experiments on Gaussian beta-ensembles at high temperature.

Tridiagonal sampling, a Sturm-bisection eigensolver, exact limiting
moments, the closed-form partition function, and Monte Carlo statistics
for the local Poisson behaviour of the spectrum.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .analytic import (
    nu_integral,
    semicircle_integral,
    stieltjes_nu,
    stieltjes_semicircle,
    theta_bounded_regime,
    theta_from_nu,
    theta_semicircle,
)
from .moments import moment_polynomial, moment_value
from .partition import PartitionQuery, free_energy_density, log_partition, log_partition_ratio
from .sampling import EnsembleParams, RngStream, sample_ensemble, sample_spectra, sample_spectrum
from .tridiag import SpectrumSample, TridiagonalSym, count_in_interval, eigenvalues, sturm_count_leq

__all__ = [
    "BACKEND",
    "EnsembleParams",
    "PartitionQuery",
    "RngStream",
    "SpectrumSample",
    "TridiagonalSym",
    "count_in_interval",
    "eigenvalues",
    "free_energy_density",
    "log_partition",
    "log_partition_ratio",
    "moment_polynomial",
    "moment_value",
    "nu_integral",
    "sample_ensemble",
    "sample_spectra",
    "sample_spectrum",
    "semicircle_integral",
    "stieltjes_nu",
    "stieltjes_semicircle",
    "sturm_count_leq",
    "theta_bounded_regime",
    "theta_from_nu",
    "theta_semicircle",
]
