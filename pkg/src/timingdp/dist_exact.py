"""Closed-form Discrete Laplace, censored Discrete Laplace and censored geometric laws.

The scale s of a Discrete Laplace law only ever enters through e^{-1/s},
which is kept as the rational a/b. Everything here is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidParameters
from .runtime_dist import ONE, ZERO, RuntimeDist


@dataclass(frozen=True)
class DiscreteLaplaceParams:
    """Discrete Laplace with shift ``mu`` and e^{-1/s} = a/b."""

    mu: int
    a: int
    b: int

    def __post_init__(self):
        if not (isinstance(self.a, int) and isinstance(self.b, int)) or not self.b > self.a >= 1:
            raise InvalidParameters(f"need integers b > a >= 1, got a={self.a}, b={self.b}")

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.a, self.b)

    @property
    def zero_mass(self) -> Fraction:
        return Fraction(self.b - self.a, self.b + self.a)


@dataclass(frozen=True)
class CensorSpec:
    """Clamp to [lower, upper] and then add ``offset``."""

    upper: int
    lower: int = 0
    offset: int = 0

    def __post_init__(self):
        if self.upper < self.lower:
            raise InvalidParameters("censoring interval is empty")


def dl_pmf(x: int, p: DiscreteLaplaceParams) -> Fraction:
    return p.zero_mass * p.ratio ** abs(x - p.mu)


def dl_cdf(x: int, p: DiscreteLaplaceParams) -> Fraction:
    """Pr[T <= x]."""
    r = p.ratio
    if x <= p.mu:
        return Fraction(p.b, p.a + p.b) * r ** (p.mu - x)
    return 1 - Fraction(p.a, p.a + p.b) * r ** (x - p.mu)


def censored_dl_pmf(t: int, p: DiscreteLaplaceParams, cs: CensorSpec) -> Fraction:
    """Mass at t of min{max{T, lower}, upper} + offset."""
    v = t - cs.offset
    if v < cs.lower or v > cs.upper:
        return ZERO
    if cs.lower == cs.upper:
        return ONE
    if v == cs.lower:
        return dl_cdf(cs.lower, p)
    if v == cs.upper:
        return 1 - dl_cdf(cs.upper - 1, p)
    return dl_pmf(v, p)


def censored_dl_dist(p: DiscreteLaplaceParams, cs: CensorSpec) -> RuntimeDist:
    atoms = {}
    for v in range(cs.lower, cs.upper + 1):
        atoms[v + cs.offset] = censored_dl_pmf(v + cs.offset, p, cs)
    return RuntimeDist(atoms)


def cens_geo_pmf(x: int, p, t: int) -> Fraction:
    """Geometric(p) on {1, 2, ...} with everything from t on lumped at t."""
    p = Fraction(p)
    if not 0 < p < 1 or t < 1:
        raise InvalidParameters("need 0 < p < 1 and t >= 1")
    if 1 <= x < t:
        return p * (1 - p) ** (x - 1)
    if x == t:
        return (1 - p) ** (t - 1)
    return ZERO


def delay_delta_bound(a: int, b: int, mu: int, t_in: int) -> Fraction:
    """2 (a/b)^(mu - t_in): the delta a censored delay guarantees for shifts up to t_in."""
    return 2 * Fraction(a, b) ** (mu - t_in)


__all__ = ["DiscreteLaplaceParams", "CensorSpec", "dl_pmf", "dl_cdf", "censored_dl_pmf",
           "censored_dl_dist", "cens_geo_pmf", "delay_delta_bound"]
