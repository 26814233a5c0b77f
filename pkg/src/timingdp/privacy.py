"""Divergences, privacy deciders, delay certificates, simulators and budget composition.

Budgets store e^eps rather than eps, so every comparison is exact. A law is
a RuntimeDist, a finite ``{point: probability}`` table, or an
ExactJointDist (read as output -> sub-distribution of runtimes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

from .dist_exact import CensorSpec, DiscreteLaplaceParams, censored_dl_dist, delay_delta_bound
from .errors import (DeltaOverflow, PreconditionViolated, ResidualMassPresent, TimingDPError,
                     UnsupportedTail)
from .metrics import MetricKind, adjacent_pairs
from .runtime_dist import ONE, ZERO, RuntimeDist
from .vm.enumerate import ExactJointDist, Limits, enumerate_exact
from .vm.isa import Program

INF = math.inf


def _frac_str(v):
    if v == INF:
        return "inf"
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


@dataclass(frozen=True)
class PrivacyBudget:
    """(e^eps, delta); delta == 0 is pure max-divergence."""

    e_eps: Fraction
    delta: Fraction = ZERO
    clamped: bool = field(default=False, compare=False)

    def __post_init__(self):
        e = self.e_eps if self.e_eps == INF else Fraction(self.e_eps)
        object.__setattr__(self, "e_eps", e)
        object.__setattr__(self, "delta", Fraction(self.delta))
        if e < 1:
            raise ValueError("e^eps must be at least 1")
        if not 0 <= self.delta <= 1:
            raise ValueError("delta must lie in [0, 1]")

    @property
    def epsilon(self) -> float:
        """Natural-log view for display only."""
        return math.log(self.e_eps) if self.e_eps != INF else INF

    @property
    def is_pure(self):
        return self.delta == 0

    def to_json(self):
        return {"e_eps": _frac_str(self.e_eps), "delta": _frac_str(self.delta)}


def compose_budgets(b1: PrivacyBudget, b2: PrivacyBudget, strict: bool = False) -> PrivacyBudget:
    """(e^eps1 * e^eps2, delta1 + delta2); delta is clamped at 1 unless ``strict``."""
    d = b1.delta + b2.delta
    if d > 1:
        if strict:
            raise DeltaOverflow(f"delta1 + delta2 = {d} exceeds 1")
        return PrivacyBudget(b1.e_eps * b2.e_eps, ONE, clamped=True)
    return PrivacyBudget(b1.e_eps * b2.e_eps, d)


# --- laws ------------------------------------------------------------------

def _law(d) -> dict:
    if isinstance(d, ExactJointDist):
        if d.residual:
            raise ResidualMassPresent(f"residual mass {d.residual}")
        return d.by_output()
    if isinstance(d, RuntimeDist):
        return {None: d}
    # A table of probabilities, or an output -> RuntimeDist map as built by by_output().
    return {k: p if isinstance(p, RuntimeDist) else RuntimeDist.point(0, p)
            for k, p in d.items() if p}


def _view(d: RuntimeDist, start, period):
    """Values on [start, start + period) and the factor applied per period."""
    w = [d.prob(start + r) for r in range(period)]
    if d.is_finite:
        return w, ZERO
    tail = d.tail()
    return w, tail.ratio ** (period // tail.period)


def _frame(p: RuntimeDist, q: RuntimeDist):
    """Common (lo, regime start, period) after which both laws are per-period geometric."""
    for d in (p, q):
        if len(d.tails) > 1:
            raise UnsupportedTail("several decay rates in one law")
    lo = min(d.lo() for d in (p, q) if d.mass())
    start = max(p.regime_start(), q.regime_start(), lo)
    period = 1
    for d in (p, q):
        if d.tails:
            per = d.tails[0].period
            period = period * per // gcd(period, per)
    return lo, start, period


def _rd_max_div(p: RuntimeDist, q: RuntimeDist):
    if p.mass() == 0:
        return ONE
    lo, start, period = _frame(p, q)
    best = ZERO
    for t in range(lo, start):
        a = p.prob(t)
        if a:
            b = q.prob(t)
            if not b:
                return INF
            best = max(best, a / b)
    wp, rp = _view(p, start, period)
    wq, rq = _view(q, start, period)
    for a, b in zip(wp, wq):
        if not a:
            continue
        if not b or rp > rq:
            return INF
        best = max(best, a / b)   # the ratio only shrinks in later periods
    return best


def _geo_sum(w, r):
    return w / (1 - r)


def _residue_delta(a, b, rp, rq, e):
    """sum_k max(0, a rp^k - e b rq^k) for one residue class."""
    if not a:
        return ZERO
    if not b:
        return _geo_sum(a, rp)
    if rp == rq:
        return _geo_sum(max(ZERO, a - e * b), rp)
    total = ZERO
    pa, pb = a, e * b
    if rp < rq:
        # positive terms first, then negative forever
        while pa > pb:
            total += pa - pb
            pa *= rp
            pb *= rq
        return total
    # negative first; from the crossing on every term is positive
    while pa <= pb:
        pa *= rp
        pb *= rq
    return _geo_sum(pa, rp) - _geo_sum(pb, rq)


def _rd_delta(p: RuntimeDist, q: RuntimeDist, e) -> Fraction:
    if p.mass() == 0:
        return ZERO
    if q.mass() == 0:
        return p.mass()
    lo, start, period = _frame(p, q)
    total = ZERO
    for t in range(lo, start):
        a = p.prob(t)
        if a:
            total += max(ZERO, a - e * q.prob(t))
    wp, rp = _view(p, start, period)
    wq, rq = _view(q, start, period)
    for a, b in zip(wp, wq):
        total += _residue_delta(a, b, rp, rq, e)
    return total


def max_div(dist1, dist2):
    """max_t Pr[dist1 = t] / Pr[dist2 = t] as e^eps; infinity off the support of dist2."""
    p, q = _law(dist1), _law(dist2)
    best = ONE
    for k, pk in p.items():
        if not pk.mass():
            continue
        qk = q.get(k)
        if qk is None or not qk.mass():
            return INF
        best = max(best, _rd_max_div(pk, qk))
        if best == INF:
            return INF
    return best


def delta_for_eps(dist1, dist2, e_eps) -> Fraction:
    """sum_t max(0, Pr[dist1 = t] - e^eps Pr[dist2 = t]); one direction only."""
    e = Fraction(e_eps)
    p, q = _law(dist1), _law(dist2)
    total = ZERO
    for k, pk in p.items():
        qk = q.get(k)
        total += pk.mass() if qk is None else _rd_delta(pk, qk, e)
    return total


def smoothed_max_div_holds(dist1, dist2, budget: PrivacyBudget) -> bool:
    """Both directions within (e^eps, delta)."""
    return (delta_for_eps(dist1, dist2, budget.e_eps) <= budget.delta
            and delta_for_eps(dist2, dist1, budget.e_eps) <= budget.delta)


# --- deciders ------------------------------------------------------------

@dataclass(frozen=True)
class PrivacyResult:
    passed: bool
    budget: PrivacyBudget
    delta_needed: Fraction
    e_eps_pure: object          # max-divergence over all checked cases, or INF
    witness: Optional[tuple]
    pairs_checked: int
    notes: tuple = ()


class _Cache:
    def __init__(self, program, limits, env_for):
        self.program, self.limits, self.env_for = program, limits, env_for
        self.store = {}

    def __call__(self, x) -> ExactJointDist:
        hit = self.store.get(x)
        if hit is None:
            env = self.env_for(x) if self.env_for else None
            hit = enumerate_exact(self.program, x, env, self.limits)
            self.store[x] = hit
        return hit


def _pairs(metric, d_in, domain, n_max, n_min, pairs):
    if pairs is not None:
        return list(pairs)
    return list(adjacent_pairs(metric, domain, n_max, d_in, n_min))


def _run(program, metric, d_in, domain, budget, n_max, limits, n_min, pairs, env_for, per_pair):
    get = _Cache(program, limits, env_for)
    todo = _pairs(metric, d_in, domain, n_max, n_min, pairs)
    worst_delta, worst_e, witness = ZERO, ONE, None
    notes = []
    for x, x2 in todo:
        for a, b in ((x, x2), (x2, x)):
            for key, delta, e in per_pair(get(a), get(b), budget, notes):
                if witness is None or delta > worst_delta:
                    worst_delta = delta
                    witness = (a, b) if key is None else (a, b, key)
                worst_e = max(worst_e, e)
    passed = worst_delta <= budget.delta
    return PrivacyResult(passed, budget, worst_delta, worst_e, witness, len(todo),
                         tuple(sorted(set(notes))))


def _output_case(j1, j2, budget, notes):
    p, q = j1.output_marginal(), j2.output_marginal()
    delta = delta_for_eps(p, q, budget.e_eps) + j1.residual
    e = max_div(p, q) if not (j1.residual or j2.residual) else INF
    if j1.residual:
        notes.append("residual mass folded into delta")
    yield None, delta, e


def _oc_case(j1, j2, budget, notes):
    b1, b2 = j1.by_output(), j2.by_output()
    r1, r2 = j1.residual, j2.residual
    for y in sorted(set(b1) | set(b2)):
        if y in b1 and y in b2:
            d = delta_for_eps(b1[y].normalized(), b2[y].normalized(), budget.e_eps)
            e = max_div(b1[y].normalized(), b2[y].normalized())
            if r1 or r2:
                # Unseen mass can move each conditional law by at most R / (m + R) in TV.
                eta1 = r1 / (b1[y].mass() + r1)
                eta2 = r2 / (b2[y].mass() + r2)
                d = min(ONE, d + eta1 + budget.e_eps * eta2)
                e = INF
                notes.append("residual mass folded into delta")
            yield y, d, e
        elif r1 or r2:
            # The output might be common once the pruned mass is accounted for.
            notes.append("output seen on one side only while residual mass is present")
            yield y, ONE, INF


def _joint_case(j1, j2, budget, notes):
    p, q = j1.by_output(), j2.by_output()
    delta = delta_for_eps(p, q, budget.e_eps) + j1.residual
    e = max_div(p, q) if not (j1.residual or j2.residual) else INF
    if j1.residual:
        notes.append("residual mass folded into delta")
    yield None, delta, e


def check_output_dp(program: Program, metric: MetricKind, d_in, domain, budget: PrivacyBudget,
                    n_max=1, limits: Optional[Limits] = None, *, n_min=0, pairs=None,
                    env_for=None) -> PrivacyResult:
    """Output law within ``budget`` in both directions over every adjacent pair."""
    return _run(program, metric, d_in, domain, budget, n_max, limits, n_min, pairs, env_for,
                _output_case)


def check_oc_timing_privacy(program: Program, metric: MetricKind, d_in, domain,
                            budget: PrivacyBudget, n_max=1, limits: Optional[Limits] = None, *,
                            n_min=0, pairs=None, env_for=None) -> PrivacyResult:
    """Runtime laws conditioned on each common output within ``budget``; witness (x, x', y)."""
    return _run(program, metric, d_in, domain, budget, n_max, limits, n_min, pairs, env_for,
                _oc_case)


def check_joint_privacy(program: Program, metric: MetricKind, d_in, domain, budget: PrivacyBudget,
                        n_max=1, limits: Optional[Limits] = None, *, n_min=0, pairs=None,
                        env_for=None) -> PrivacyResult:
    return _run(program, metric, d_in, domain, budget, n_max, limits, n_min, pairs, env_for,
                _joint_case)


# --- delays ----------------------------------------------------------------

@dataclass(frozen=True)
class DelayCertificate:
    t_in: int
    budget: PrivacyBudget          # delta here is the closed form 2 (a/b)^(mu - t_in)
    params: DiscreteLaplaceParams
    censor: CensorSpec
    exact_delta: Fraction
    per_shift: tuple               # exact delta for every shift 0..t_in

    def to_json(self):
        return {
            "t_in": self.t_in,
            "budget": self.budget.to_json(),
            "exact_delta": _frac_str(self.exact_delta),
            "params": {"mu": self.params.mu, "a": self.params.a, "b": self.params.b},
            "censor": {"lower": self.censor.lower, "upper": self.censor.upper,
                       "offset": self.censor.offset},
            "per_shift": [_frac_str(d) for d in self.per_shift],
        }


def certify_delay(params: DiscreteLaplaceParams, cs: CensorSpec, t_in: int,
                  e_eps_target=None) -> DelayCertificate:
    """Certify Phi = min{max{T, 0}, B} + c against every shift 0 <= t <= t_in.

    The scale is tied to t_in through e^eps = (b/a)^t_in.
    """
    e = Fraction(params.b, params.a) ** t_in
    if e_eps_target is not None and Fraction(e_eps_target) != e:
        raise PreconditionViolated(f"e^eps must equal (b/a)^t_in = {e}, got {e_eps_target}")
    if t_in < 0:
        raise PreconditionViolated("t_in must be nonnegative")
    if params.mu < t_in:
        raise PreconditionViolated(f"mu = {params.mu} is below t_in = {t_in}")
    if cs.lower != 0:
        raise PreconditionViolated("delays are censored below at 0")
    if cs.upper < 2 * params.mu:
        raise PreconditionViolated(f"B = {cs.upper} is below 2 mu = {2 * params.mu}")
    phi = censored_dl_dist(params, cs)
    per_shift = []
    for t in range(t_in + 1):
        moved = phi.shift(t)
        per_shift.append(max(delta_for_eps(phi, moved, e), delta_for_eps(moved, phi, e)))
    exact = max(per_shift)
    closed = delay_delta_bound(params.a, params.b, params.mu, t_in)
    if exact > closed:
        raise TimingDPError(f"exact delta {exact} exceeds the closed form {closed}")
    return DelayCertificate(t_in, PrivacyBudget(e, min(closed, ONE)), params, cs, exact,
                            tuple(per_shift))


# --- simulators --------------------------------------------------------------

@dataclass(frozen=True)
class TimingSimulator:
    """S(side, y) for the two inputs of one adjacent pair (side 0 is x, side 1 is x')."""

    table: tuple   # per side: {y: RuntimeDist}

    def law(self, side: int, y) -> RuntimeDist:
        got = self.table[side].get(tuple(y))
        if got is not None:
            return got
        other = self.table[1 - side].get(tuple(y))
        return other if other is not None else RuntimeDist.point(0)

    def outputs(self):
        return sorted(set(self.table[0]) | set(self.table[1]))


def build_timing_simulator(dist_x: ExactJointDist, dist_x2: ExactJointDist) -> TimingSimulator:
    for d in (dist_x, dist_x2):
        if d.residual:
            raise ResidualMassPresent(f"residual mass {d.residual}")
    conds = tuple({y: d.normalized() for y, d in j.by_output().items()}
                  for j in (dist_x, dist_x2))
    return TimingSimulator(conds)


def simulator_conditions(sim: TimingSimulator, dist_x: ExactJointDist, dist_x2: ExactJointDist,
                         budget: PrivacyBudget, probe=((),)) -> tuple:
    """The three defining conditions; ``probe`` adds outputs outside both supports."""
    c1 = all(sim.law(0, y) == d.normalized() for y, d in dist_x.by_output().items())
    c2 = all(sim.law(1, y) == d.normalized() for y, d in dist_x2.by_output().items())
    ys = set(sim.outputs()) | {tuple(y) for y in probe}
    c3 = all(smoothed_max_div_holds(sim.law(0, y), sim.law(1, y), budget) for y in ys)
    return c1, c2, c3


def oc_pair_budget_delta(dist_x: ExactJointDist, dist_x2: ExactJointDist, e_eps) -> Fraction:
    """Least delta at e^eps for which this pair meets OC timing privacy."""
    b1, b2 = dist_x.by_output(), dist_x2.by_output()
    worst = ZERO
    for y in set(b1) & set(b2):
        p, q = b1[y].normalized(), b2[y].normalized()
        worst = max(worst, delta_for_eps(p, q, e_eps), delta_for_eps(q, p, e_eps))
    return worst


__all__ = ["DelayCertificate", "INF", "PrivacyBudget", "PrivacyResult", "TimingSimulator",
           "build_timing_simulator", "certify_delay", "check_joint_privacy",
           "check_oc_timing_privacy", "check_output_dp", "compose_budgets", "delta_for_eps",
           "max_div", "oc_pair_budget_delta", "simulator_conditions", "smoothed_max_div_holds"]
