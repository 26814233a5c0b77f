"""Couplings of discrete laws: the infinity-Wasserstein gap and exact max-flow feasibility."""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from math import gcd

from .errors import UnsupportedTail
from .runtime_dist import ZERO, RuntimeDist

INF = math.inf


def _quantile_walk(it1, it2, stop):
    """Max |t1 - t2| over quantile levels up to ``stop`` under the monotone coupling."""
    t1, m1 = next(it1)
    t2, m2 = next(it2)
    consumed = ZERO
    gap = 0
    while True:
        gap = max(gap, abs(t1 - t2))
        step = min(m1, m2)
        consumed += step
        m1 -= step
        m2 -= step
        if stop is not None and consumed >= stop:
            return gap
        try:
            if m1 == 0:
                t1, m1 = next(it1)
            if m2 == 0:
                t2, m2 = next(it2)
        except StopIteration:
            return gap


def winf(dist1: RuntimeDist, dist2: RuntimeDist):
    """Least t such that some coupling keeps |r - r'| <= t almost surely.

    On the integers the monotone (quantile) coupling is optimal, so t is the
    largest gap between the two inverse CDFs. Both laws must carry the same
    total mass. With geometric tails the gap pattern repeats once both laws
    are inside their periodic regime, so one period past that point is
    enough; tails of different decay rates (or a tail against a finite law)
    drift apart without bound and give infinity.
    """
    if dist1.mass() != dist2.mass():
        raise ValueError(f"masses differ: {dist1.mass()} vs {dist2.mass()}")
    if dist1.mass() == 0:
        return 0
    if dist1.is_finite and dist2.is_finite:
        return _quantile_walk(dist1.iter_atoms(), dist2.iter_atoms(), None)
    if dist1.is_finite != dist2.is_finite:
        return INF
    a, b = dist1.tail(), dist2.tail()
    if not a.same_rate(b):
        return INF
    period = a.period * b.period // gcd(a.period, b.period)
    rho = a.ratio ** (period // a.period)
    v0 = min(dist1.survival(dist1.regime_start()), dist2.survival(dist2.regime_start()))
    stop = dist1.mass() - rho * v0
    return _quantile_walk(dist1.iter_atoms(), dist2.iter_atoms(), stop)


# --- exact max-flow ----------------------------------------------------------

class FlowNetwork:
    """Edmonds-Karp on exact rationals; ``None`` capacity means unbounded."""

    def __init__(self):
        self.cap = {}
        self.adj = {}

    def add_edge(self, u, v, c):
        self.adj.setdefault(u, set()).add(v)
        self.adj.setdefault(v, set()).add(u)
        key = (u, v)
        old = self.cap.get(key, ZERO)
        if c is None or old is None:
            self.cap[key] = None
        else:
            self.cap[key] = old + Fraction(c)
        self.cap.setdefault((v, u), ZERO)

    def _residual(self, u, v, flow):
        c = self.cap.get((u, v), ZERO)
        f = flow.get((u, v), ZERO)
        return None if c is None else c - f

    def max_flow(self, s, t):
        flow = {}
        total = ZERO
        while True:
            parent = {s: None}
            q = deque([s])
            while q and t not in parent:
                u = q.popleft()
                for v in self.adj.get(u, ()):
                    if v in parent:
                        continue
                    r = self._residual(u, v, flow)
                    if r is None or r > 0:
                        parent[v] = u
                        q.append(v)
            if t not in parent:
                return total
            push = None
            v = t
            while parent[v] is not None:
                r = self._residual(parent[v], v, flow)
                if r is not None and (push is None or r < push):
                    push = r
                v = parent[v]
            if push is None:
                raise ValueError("unbounded augmenting path")
            v = t
            while parent[v] is not None:
                u = parent[v]
                flow[(u, v)] = flow.get((u, v), ZERO) + push
                flow[(v, u)] = flow.get((v, u), ZERO) - push
                v = u
            total += push


def coupling_exists(p: dict, q: dict, allowed) -> bool:
    """Is there a coupling of finite laws p, q supported on pairs with allowed(u, v)?"""
    mp = sum(p.values(), ZERO)
    if mp != sum(q.values(), ZERO):
        return False
    net = FlowNetwork()
    for u, pu in p.items():
        net.add_edge("s", ("L", u), pu)
        for v in q:
            if allowed(u, v):
                net.add_edge(("L", u), ("R", v), None)
    for v, qv in q.items():
        net.add_edge(("R", v), "t", qv)
    return net.max_flow("s", "t") == mp


def winf_by_flow(dist1: RuntimeDist, dist2: RuntimeDist):
    """Brute-force twin of ``winf`` for finite laws: smallest feasible gap."""
    if not (dist1.is_finite and dist2.is_finite):
        raise UnsupportedTail("flow oracle needs finite supports")
    p, q = dist1.as_dict(), dist2.as_dict()
    gaps = sorted({abs(u - v) for u in p for v in q})
    for g in gaps:
        if coupling_exists(p, q, lambda u, v, g=g: abs(u - v) <= g):
            return g
    return INF


__all__ = ["FlowNetwork", "INF", "coupling_exists", "winf", "winf_by_flow"]
