"""Exact limiting moments of the bounded-regime spectral measure.

The 2p-th moment is a sum over closed lattice paths with steps in
{-1, 0, +1}. A path contributes only if every level carries an even
number of flat steps; its weight is, level by level, the number of pair
partitions of the flat steps times the rising factorial
``x (x + 1) ... (x + U_j - 1)`` in ``x = gamma * u``, where ``U_j``
counts up-steps into level ``j``. The weight is integrated over
``u in [0, 1]`` and the sum is multiplied by ``(gamma + 1)**(-k/2)``.

Everything is kept in exact rational arithmetic until
:func:`moment_value`.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator

__all__ = [
    "K_MAX",
    "LatticePath",
    "MomentPolynomial",
    "enumerate_paths",
    "moment_polynomial",
    "moment_polynomial_bruteforce",
    "moment_value",
    "carleman_bound_check",
    "double_factorial",
    "catalan",
]

K_MAX = 16


def double_factorial(n: int) -> int:
    """``n!!`` with the convention ``0!! = (-1)!! = 1``."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def pairings(n: int) -> int:
    """Number of perfect matchings of n points: ``(n-1)!!``, 0 for odd n."""
    if n % 2:
        return 0
    return double_factorial(n - 1)


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


@lru_cache(maxsize=None)
def _rising(n: int) -> tuple[int, ...]:
    """Coefficients of ``x (x+1) ... (x+n-1)`` in the monomial basis."""
    poly = [1]
    for i in range(n):
        nxt = [0] * (len(poly) + 1)
        for m, c in enumerate(poly):
            nxt[m + 1] += c
            nxt[m] += i * c
        poly = nxt
    return tuple(poly)


def _polymul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _polyadd(acc, p, scale=1):
    if len(acc) < len(p):
        acc.extend([0] * (len(p) - len(acc)))
    for i, c in enumerate(p):
        acc[i] += scale * c
    return acc


@dataclass(frozen=True)
class LatticePath:
    """Closed path of length k with steps in {-1, 0, +1}, started at level 0."""

    steps: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (-1, 0, 1) for s in self.steps):
            raise ValueError("steps must be -1, 0 or +1")
        if sum(self.steps) != 0:
            raise ValueError("path must return to level 0")

    @property
    def k(self) -> int:
        return len(self.steps)

    def tallies(self) -> tuple[dict[int, int], dict[int, int]]:
        """Flat-step counts ``F_j`` and up-steps-into-level counts ``U_j``."""
        flats: dict[int, int] = defaultdict(int)
        ups: dict[int, int] = defaultdict(int)
        level = 0
        for s in self.steps:
            if s == 0:
                flats[level] += 1
            level += s
            if s == 1:
                ups[level] += 1
        return dict(flats), dict(ups)

    @property
    def admissible(self) -> bool:
        flats, _ = self.tallies()
        return all(f % 2 == 0 for f in flats.values())

    def weight_polynomial(self) -> list[int]:
        """Weight as integer coefficients of a polynomial in ``x = gamma u``."""
        flats, ups = self.tallies()
        poly = [1]
        for f in flats.values():
            poly = [c * pairings(f) for c in poly]
        for u in ups.values():
            poly = _polymul(poly, _rising(u))
        return poly


def _check_k(k: int):
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    if k > K_MAX:
        raise ValueError(f"k={k} exceeds k_max={K_MAX}")


def enumerate_paths(k: int) -> Iterator[LatticePath]:
    """Admissible closed paths of length k, by depth-first search.

    Prunes any prefix whose height exceeds the number of remaining steps.
    """
    _check_k(k)
    steps: list[int] = []

    def dfs(level: int, remaining: int):
        if remaining == 0:
            if level == 0:
                path = LatticePath(tuple(steps))
                if path.admissible:
                    yield path
            return
        for s in (-1, 0, 1):
            nxt = level + s
            if abs(nxt) <= remaining - 1:
                steps.append(s)
                yield from dfs(nxt, remaining - 1)
                steps.pop()

    yield from dfs(0, k)


@dataclass(frozen=True)
class MomentPolynomial:
    """``m_k(gamma) = (gamma + 1)**(-k/2) * P(gamma)`` with P exact.

    ``coefficients[i]`` is the coefficient of ``gamma**i`` in P.
    """

    k: int
    coefficients: tuple[Fraction, ...]

    @property
    def prefactor_exponent(self) -> Fraction:
        return Fraction(self.k, 2)

    def numerator_at(self, gamma) -> Fraction:
        """P(gamma), exact when gamma is rational."""
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * gamma + c
        return acc

    def exact_value(self, gamma) -> Fraction:
        """m_k at rational gamma; exact since k/2 is an integer."""
        g = Fraction(gamma)
        return self.numerator_at(g) / (g + 1) ** (self.k // 2)

    def __call__(self, gamma: float) -> float:
        return moment_value(self.k, gamma)


def _integrate(poly_x: list[int]) -> tuple[Fraction, ...]:
    # x**m = gamma**m u**m and int_0^1 u**m du = 1/(m+1)
    coeffs = [Fraction(c, m + 1) for m, c in enumerate(poly_x)]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def moment_polynomial_bruteforce(k: int) -> MomentPolynomial:
    """Same as :func:`moment_polynomial`, summing path by path."""
    _check_k(k)
    if k % 2:
        raise ValueError(f"odd moment k={k} requested; odd moments vanish")
    acc: list[int] = [0]
    for path in enumerate_paths(k):
        _polyadd(acc, path.weight_polynomial())
    return MomentPolynomial(k, _integrate(acc))


@lru_cache(maxsize=None)
def _weight_sum(k: int) -> tuple[int, ...]:
    """Sum over admissible paths of the weight polynomial, by dynamic programming.

    State: current level, and the (F, U) tallies of every level the walk
    can still revisit. A level that is out of reach of the remaining steps
    is closed: its factor is multiplied into the carried polynomial and it
    leaves the state. States that agree are merged with polynomial sums.
    """
    # state -> polynomial (list of ints); tallies as sorted tuple of (level, F, U)
    states: dict[tuple, list[int]] = {(0, ()): [1]}
    for t in range(k):
        remaining = k - t - 1
        nxt: dict[tuple, list[int]] = {}
        for (level, tal), poly in states.items():
            tally = {lv: (f, u) for lv, f, u in tal}
            for s in (-1, 0, 1):
                new = level + s
                if abs(new) > remaining:
                    continue
                td = dict(tally)
                if s == 0:
                    f, u = td.get(level, (0, 0))
                    td[level] = (f + 1, u)
                elif s == 1:
                    f, u = td.get(new, (0, 0))
                    td[new] = (f, u + 1)
                else:
                    td.setdefault(new, (0, 0))
                p = poly
                dead = False
                for lv in [lv for lv in td if abs(lv - new) > remaining]:
                    f, u = td.pop(lv)
                    if f % 2:
                        dead = True
                        break
                    factor = pairings(f)
                    if factor != 1:
                        p = [c * factor for c in p]
                    if u:
                        p = _polymul(p, _rising(u))
                if dead:
                    continue
                key = (new, tuple(sorted((lv, f, u) for lv, (f, u) in td.items())))
                if key in nxt:
                    _polyadd(nxt[key], p)
                else:
                    nxt[key] = list(p)
        states = nxt
    acc: list[int] = [0]
    for (level, tal), poly in states.items():
        p = poly
        ok = True
        for _, f, u in tal:
            if f % 2:
                ok = False
                break
            p = [c * pairings(f) for c in p]
            if u:
                p = _polymul(p, _rising(u))
        if ok:
            _polyadd(acc, p)
    return tuple(acc)


def moment_polynomial(k: int) -> MomentPolynomial:
    """Exact ``m_k`` as a rational polynomial in gamma over ``(gamma+1)**(k/2)``."""
    _check_k(k)
    if k % 2:
        raise ValueError(f"odd moment k={k} requested; odd moments vanish")
    return MomentPolynomial(k, _integrate(list(_weight_sum(k))))


def moment_value(k: int, gamma: float) -> float:
    """Floating-point ``m_k(gamma)``."""
    if not gamma >= 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    mp = moment_polynomial(k)
    g = float(gamma)
    x = 1.0 / (1.0 + g)
    # evaluate P(g) (1+g)^(-k/2) as a polynomial in g/(1+g) and 1/(1+g)
    # so large gamma does not overflow
    y = g * x
    half = k // 2
    total = 0.0
    for i, c in enumerate(mp.coefficients):
        total += float(c) * y**i * x ** (half - i)
    return total


def carleman_bound_check(k_max: int, gamma: float) -> bool:
    """Check ``m_k <= max(1, gamma)**k (k-1)!! 3**k`` for even ``k <= k_max``."""
    big = max(1.0, float(gamma))
    for k in range(0, min(k_max, K_MAX) + 1, 2):
        bound = big**k * double_factorial(k - 1) * 3.0**k
        if moment_value(k, gamma) > bound:
            return False
    return True
