"""Dataset distances and exhaustive adjacent-pair streams over small domains."""

from __future__ import annotations

import enum
import itertools
import math
from typing import Iterable, Iterator, Sequence

from .errors import ShapeMismatch

INF = math.inf


class MetricKind(enum.Enum):
    HAMMING = "hamming"
    INSERT_DELETE = "insert_delete"
    ABS_DIFF = "abs_diff"

    @classmethod
    def parse(cls, text):
        key = text.strip().lower().replace("-", "_")
        aliases = {"hd": "hamming", "id": "insert_delete", "abs": "abs_diff", "d_n": "abs_diff"}
        return cls(aliases.get(key, key))


def _lcs(x, y):
    prev = [0] * (len(y) + 1)
    for a in x:
        cur = [0]
        for j, b in enumerate(y):
            cur.append(prev[j] + 1 if a == b else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def _as_seq(v):
    if isinstance(v, int):
        raise ShapeMismatch("dataset metric applied to a scalar")
    return tuple(v)


def distance(m: MetricKind, x, x2):
    if m is MetricKind.ABS_DIFF:
        if not isinstance(x, int):
            if len(x) != 1 or len(x2) != 1:
                raise ShapeMismatch("absolute difference needs scalars")
            x, x2 = x[0], x2[0]
        elif not isinstance(x2, int):
            raise ShapeMismatch("absolute difference needs scalars")
        return abs(x - x2)
    x, x2 = _as_seq(x), _as_seq(x2)
    if m is MetricKind.HAMMING:
        if len(x) != len(x2):
            return INF
        return sum(1 for a, b in zip(x, x2) if a != b)
    # Every edit script keeps a common subsequence and rewrites the rest.
    return len(x) + len(x2) - 2 * _lcs(x, x2)


def datasets(domain: Iterable[int], n_max: int, n_min: int = 0) -> Iterator[tuple]:
    rows = list(domain)
    for n in range(n_min, n_max + 1):
        yield from itertools.product(rows, repeat=n)


def adjacent_pairs(m: MetricKind, domain: Sequence[int], n_max: int, d_in,
                   n_min: int = 0) -> Iterator[tuple]:
    """All ordered pairs of datasets with n_min <= length <= n_max within ``d_in``.

    For ABS_DIFF the points are the one-cell inputs (v,) with v in ``domain``.
    """
    if m is MetricKind.ABS_DIFF:
        pts = [(v,) for v in domain]
    elif m is MetricKind.HAMMING:
        pts = None
    else:
        pts = list(datasets(domain, n_max, n_min))
    if pts is None:
        # Hamming pairs never cross lengths.
        for n in range(n_min, n_max + 1):
            same = list(datasets(domain, n, n))
            for x in same:
                for x2 in same:
                    if distance(m, x, x2) <= d_in:
                        yield x, x2
        return
    for x in pts:
        for x2 in pts:
            if distance(m, x, x2) <= d_in:
                yield x, x2


__all__ = ["INF", "MetricKind", "adjacent_pairs", "datasets", "distance"]
