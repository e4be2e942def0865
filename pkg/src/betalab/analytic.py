"""Closed-form reference objects: semicircle law, its Stieltjes transform,
the null-mass correction measure nu and the local Poisson intensities."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureError",
    "semicircle_density",
    "semicircle_integral",
    "stieltjes_semicircle",
    "stieltjes_semicircle_derivative",
    "stieltjes_nu",
    "nu_integral",
    "nu_continuous_density",
    "NU_ATOMS",
    "theta_semicircle",
    "theta_from_nu",
    "theta_bounded_regime",
    "bounded_intensity_prefactor",
]

# nu = 1/2 (delta_{-2} + delta_2) - 1_{|x|<2} dx / (pi sqrt(4 - x^2))
NU_ATOMS = {-2.0: 0.5, 2.0: 0.5}


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


def semicircle_density(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def nu_continuous_density(x):
    """Density of the absolutely continuous (negative) part of nu on (-2, 2)."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(x) < 2.0, -1.0 / (np.pi * np.sqrt(4.0 - x * x)), 0.0)
    return out if out.ndim else float(out)


def _check_upper(z) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"z must lie in the open upper half-plane, got {z}")
    return z


def _sqrt_z2m4(z):
    # principal roots of each factor: the branch with sqrt(z^2-4) ~ z at infinity
    return np.sqrt(z - 2.0) * np.sqrt(z + 2.0)


def stieltjes_semicircle(z) -> complex:
    """``U(z) = (z - sqrt(z^2 - 4)) / 2``, the transform ``int sigma(dt) / (z - t)``."""
    z = _check_upper(z)
    return complex(0.5 * (z - _sqrt_z2m4(complex(z))))


def stieltjes_semicircle_derivative(z) -> complex:
    z = _check_upper(z)
    return complex(0.5 * (1.0 - z / _sqrt_z2m4(z)))


def stieltjes_nu(z) -> complex:
    """``int nu(dt) / (z - t) = z / (z^2 - 4) - 1 / sqrt(z^2 - 4)``."""
    z = _check_upper(z)
    s = _sqrt_z2m4(z)
    return complex(z / ((z - 2.0) * (z + 2.0)) - 1.0 / s)


def _quad(f, a, b, tol, points=None, what="integral"):
    out = integrate.quad(
        f, a, b, points=points, epsabs=tol, epsrel=tol, limit=500, full_output=1
    )
    val, err = out[0], out[1]
    if len(out) > 3:  # quad only appends a message when ier > 0
        raise QuadratureError(f"{what} did not converge: {out[3].splitlines()[0]}", err)
    return val, err


def _breaks_to_u(breakpoints: Sequence[float]):
    pts = sorted(
        {math.acos(x / 2.0) for x in breakpoints if -2.0 < x < 2.0}
    )
    return [p for p in pts if 0.0 < p < math.pi] or None


def nu_integral(
    h: Callable[[float], float],
    tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
) -> float:
    """``int h dnu = (h(-2) + h(2)) / 2 - (1/pi) int_0^pi h(2 cos u) du``.

    The substitution ``x = 2 cos u`` removes the inverse square-root edge
    singularity. ``breakpoints`` lists interior x where h is singular
    (e.g. E for ``log|E - x|``); the u-integral is split there.
    """
    atoms = 0.5 * (float(h(-2.0)) + float(h(2.0)))
    val, _ = _quad(
        lambda u: h(2.0 * math.cos(u)), 0.0, math.pi, tol,
        points=_breaks_to_u(breakpoints), what="nu integral",
    )
    return atoms - val / math.pi


def semicircle_integral(
    h: Callable[[float], float],
    tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
) -> float:
    """``int h dsigma = (2/pi) int_0^pi h(2 cos u) sin(u)^2 du``."""
    val, _ = _quad(
        lambda u: h(2.0 * math.cos(u)) * math.sin(u) ** 2, 0.0, math.pi, tol,
        points=_breaks_to_u(breakpoints), what="semicircle integral",
    )
    return 2.0 * val / math.pi


def theta_semicircle(E: float) -> float:
    """Bulk intensity ``sqrt(4 - E^2) / (2 pi)``; raises outside (-2, 2)."""
    if not abs(E) < 2.0:
        raise ValueError(f"E must lie in the bulk (-2, 2), got {E}")
    return math.sqrt(4.0 - E * E) / (2.0 * math.pi)


def theta_from_nu(E: float, tol: float = 1e-10) -> float:
    """``exp(int log|E - t| dnu(t)) / (2 pi)``; equals :func:`theta_semicircle`."""
    if not abs(E) < 2.0:
        raise ValueError(f"E must lie in the bulk (-2, 2), got {E}")
    log_pot = nu_integral(lambda t: math.log(abs(E - t)), tol=tol, breakpoints=(E,))
    return math.exp(log_pot) / (2.0 * math.pi)


def bounded_intensity_prefactor(gamma: float) -> float:
    """``(gamma+1)**(gamma+1/2) / (sqrt(2 pi) Gamma(gamma+1))``."""
    return math.exp(
        (gamma + 0.5) * math.log(gamma + 1.0)
        - 0.5 * math.log(2.0 * math.pi)
        - math.lgamma(gamma + 1.0)
    )


def theta_bounded_regime(E: float, gamma: float, log_potential: float) -> float:
    """Local Poisson intensity at E when N beta -> 2 gamma.

    ``log_potential`` is ``int log|E - x| dmu_gamma(x)``; the limiting
    measure has no closed form here, so callers estimate it from samples
    (:func:`betalab.stats.log_potential_mu_gamma`).
    """
    for name, v in (("E", E), ("gamma", gamma), ("log_potential", log_potential)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    log_pot_term = 2.0 * gamma * log_potential if gamma else 0.0
    return bounded_intensity_prefactor(gamma) * math.exp(
        -(gamma + 1.0) * E * E / 2.0 + log_pot_term
    )
