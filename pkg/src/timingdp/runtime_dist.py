"""Exact distributions over nonnegative integer runtimes.

A distribution is a finite table of atoms plus zero or more geometric tails.
A tail ``(pattern, ratio, period)`` stands for

    sum_{k >= 0} ratio**k * (pattern shifted right by k * period)

which is the exact law produced by a loop that returns to an identical
machine state with probability ``ratio`` after ``period`` cost units. Finite
tables cover every bounded program; tails appear only when the enumerator
summarizes such a loop.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterator, Mapping, Optional

from .errors import UnsupportedTail

ZERO = Fraction(0)
ONE = Fraction(1)


def _lcm(a, b):
    return a * b // gcd(a, b)


def _add_into(acc, t, p):
    q = acc.get(t, ZERO) + p
    if q:
        acc[t] = q
    else:
        acc.pop(t, None)


class Tail:
    __slots__ = ("pattern", "ratio", "period")

    def __init__(self, pattern: Mapping[int, Fraction], ratio: Fraction, period: int):
        ratio = Fraction(ratio)
        if not 0 < ratio < 1:
            raise ValueError("tail ratio must lie in (0, 1)")
        if period < 1:
            raise ValueError("tail period must be positive")
        self.pattern = {t: Fraction(p) for t, p in pattern.items() if p}
        self.ratio = ratio
        self.period = int(period)

    def __repr__(self):
        return f"Tail(ratio={self.ratio}, period={self.period}, pattern={self.pattern})"

    @property
    def pattern_mass(self):
        return sum(self.pattern.values(), ZERO)

    @property
    def mass(self):
        return self.pattern_mass / (1 - self.ratio)

    def same_rate(self, other: "Tail"):
        return self.ratio ** other.period == other.ratio ** self.period

    def shift(self, d):
        return Tail({t + d: p for t, p in self.pattern.items()}, self.ratio, self.period)

    def scale(self, w):
        return Tail({t: p * w for t, p in self.pattern.items()}, self.ratio, self.period)

    def realign(self, period):
        """Same law rewritten with a period that is a multiple of the current one."""
        if period % self.period:
            raise ValueError("new period must be a multiple of the old one")
        m = period // self.period
        pat = {}
        r = ONE
        for k in range(m):
            for t, p in self.pattern.items():
                _add_into(pat, t + k * self.period, p * r)
            r *= self.ratio
        return Tail(pat, self.ratio ** m, period)

    def prob(self, t):
        if not self.pattern:
            return ZERO
        lo, hi = min(self.pattern), max(self.pattern)
        if t < lo:
            return ZERO
        total = ZERO
        k_min = max(0, -((hi - t) // self.period))  # ceil((t - hi) / period)
        k = k_min
        while t - k * self.period >= lo:
            p = self.pattern.get(t - k * self.period)
            if p:
                total += p * self.ratio ** k
            k += 1
        return total

    def regime_start(self):
        """First t from which prob(t + period) == ratio * prob(t) always holds."""
        if not self.pattern:
            return 0
        return max(self.pattern) - self.period + 1


def _merge_tails(tails):
    """Group tails by decay rate; each group collapses into one aligned tail."""
    groups = []
    for tail in tails:
        if not tail.pattern:
            continue
        for g in groups:
            if g[0].same_rate(tail):
                g.append(tail)
                break
        else:
            groups.append([tail])
    merged = []
    for g in groups:
        period = 1
        for tail in g:
            period = _lcm(period, tail.period)
        pat = {}
        ratio = None
        for tail in g:
            aligned = tail.realign(period)
            ratio = aligned.ratio
            for t, p in aligned.pattern.items():
                _add_into(pat, t, p)
        if pat:
            merged.append(Tail(pat, ratio, period))
    return tuple(merged)


class RuntimeDist:
    """Sub-probability distribution on integers: finite atoms plus tails."""

    __slots__ = ("atoms", "tails")

    def __init__(self, atoms: Optional[Mapping[int, Fraction]] = None, tails=()):
        self.atoms = {int(t): Fraction(p) for t, p in (atoms or {}).items() if p}
        if any(p < 0 for p in self.atoms.values()):
            raise ValueError("negative probability")
        self.tails = _merge_tails(tails)

    @classmethod
    def point(cls, t, p=ONE):
        return cls({t: p})

    @classmethod
    def uniform(cls, values):
        values = list(values)
        w = Fraction(1, len(values))
        atoms = {}
        for v in values:
            atoms[v] = atoms.get(v, ZERO) + w
        return cls(atoms)

    # --- basic algebra ---------------------------------------------------

    @property
    def is_finite(self):
        return not self.tails

    def mass(self):
        return sum(self.atoms.values(), ZERO) + sum((t.mass for t in self.tails), ZERO)

    def shift(self, d):
        return RuntimeDist({t + d: p for t, p in self.atoms.items()},
                           [tail.shift(d) for tail in self.tails])

    def scale(self, w):
        w = Fraction(w)
        return RuntimeDist({t: p * w for t, p in self.atoms.items()},
                           [tail.scale(w) for tail in self.tails])

    def __add__(self, other: "RuntimeDist"):
        atoms = dict(self.atoms)
        for t, p in other.atoms.items():
            _add_into(atoms, t, p)
        return RuntimeDist(atoms, self.tails + other.tails)

    def normalized(self):
        m = self.mass()
        if m == 0:
            raise ValueError("cannot normalize an empty distribution")
        return self.scale(1 / m)

    def convolve(self, other: "RuntimeDist"):
        """Law of the sum of independent draws; one side must be finite."""
        if self.tails and other.tails:
            raise UnsupportedTail("convolution of two infinite-support laws")
        if other.tails:
            return other.convolve(self)
        out = RuntimeDist()
        for t, p in other.atoms.items():
            out = out + self.shift(t).scale(p)
        return out

    def prob(self, t):
        p = self.atoms.get(t, ZERO)
        for tail in self.tails:
            p += tail.prob(t)
        return p

    def lo(self):
        cands = list(self.atoms)
        cands += [min(t.pattern) for t in self.tails]
        if not cands:
            raise ValueError("empty distribution")
        return min(cands)

    def hi(self):
        if self.tails:
            return float("inf")
        return max(self.atoms)

    def support(self):
        if self.tails:
            raise UnsupportedTail("infinite support")
        return sorted(self.atoms)

    def as_dict(self):
        if self.tails:
            raise UnsupportedTail("infinite support has no finite table")
        return dict(sorted(self.atoms.items()))

    # --- tail structure --------------------------------------------------

    def tail(self):
        """The single merged tail, or None for finite laws."""
        if not self.tails:
            return None
        if len(self.tails) > 1:
            raise UnsupportedTail("tails with different decay rates")
        return self.tails[0]

    def regime_start(self):
        starts = [max(self.atoms) + 1] if self.atoms else []
        for tail in self.tails:
            starts.append(tail.regime_start())
        return max(starts) if starts else 0

    def iter_atoms(self) -> Iterator:
        """Yield (t, p) with p > 0 in increasing t; endless when tails exist."""
        if not self.atoms and not self.tails:
            return
        t = self.lo()
        if not self.tails:
            for s in sorted(self.atoms):
                yield s, self.atoms[s]
            return
        while True:
            p = self.prob(t)
            if p:
                yield t, p
            t += 1

    def survival(self, t):
        """Mass at runtimes >= t."""
        below = ZERO
        if self.atoms or self.tails:
            lo = self.lo()
            for s in range(lo, t):
                below += self.prob(s)
        return self.mass() - below

    # --- comparison ------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, RuntimeDist):
            return NotImplemented
        if self.is_finite and other.is_finite:
            return self.atoms == other.atoms
        if self.is_finite != other.is_finite:
            return False
        a, b = self.tail(), other.tail()
        if not a.same_rate(b):
            return False
        period = _lcm(a.period, b.period)
        start = max(self.regime_start(), other.regime_start())
        lo = min(self.lo(), other.lo())
        return all(self.prob(t) == other.prob(t) for t in range(lo, start + period))

    def __hash__(self):
        return hash((frozenset(self.atoms.items()), len(self.tails)))

    def __repr__(self):
        body = ", ".join(f"{t}: {p}" for t, p in sorted(self.atoms.items()))
        if self.tails:
            return f"RuntimeDist({{{body}}}, tails={list(self.tails)})"
        return f"RuntimeDist({{{body}}})"
