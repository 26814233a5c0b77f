"""Coupling-based stability deciders and the stability-bound calculus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .coupling import INF, coupling_exists, winf, winf_by_flow
from .errors import BoundMismatch, ResidualMassPresent
from .metrics import MetricKind, adjacent_pairs, datasets, distance
from .runtime_dist import RuntimeDist
from .vm.enumerate import ExactJointDist, Limits, enumerate_exact
from .vm.isa import Program


@dataclass(frozen=True)
class StabilityBound:
    """(d_in -> t_out), or (d_in -> {d_out, t_out}) when ``d_out`` is set."""

    d_in: float
    t_out: float
    d_out: Optional[float] = None

    def __post_init__(self):
        for v in (self.d_in, self.t_out, self.d_out):
            if v is not None and v < 0:
                raise ValueError("stability bounds are nonnegative")

    @property
    def is_joint(self):
        return self.d_out is not None


# A second chaining stage may be a fixed bound or a map d -> t_out (or d -> bound).
StageMap = Union[StabilityBound, Callable]


def _at(stage: StageMap, d) -> StabilityBound:
    if isinstance(stage, StabilityBound):
        if d > stage.d_in:
            raise BoundMismatch(f"first stage moves outputs by {d}, second stage only "
                                f"covers inputs within {stage.d_in}")
        return stage
    got = stage(d)
    if isinstance(got, StabilityBound):
        return got
    return StabilityBound(d, got)


def stability_chain(joint1: StabilityBound, stage2: StageMap) -> StabilityBound:
    """Bound for running stage 2 on the output of a jointly stable stage 1."""
    if not joint1.is_joint:
        raise BoundMismatch("chaining needs a joint output/timing bound for the first stage")
    b2 = _at(stage2, joint1.d_out)
    return StabilityBound(joint1.d_in, joint1.t_out + b2.t_out, b2.d_out)


def stability_compose(oc1: StageMap, oc2: StageMap, d_in=None) -> StabilityBound:
    """Bound for the paired program; both stages are read at the same d_in."""
    if d_in is None:
        if not isinstance(oc1, StabilityBound):
            raise BoundMismatch("give d_in when the first stage is a map")
        d_in = oc1.d_in
    b1 = oc1 if isinstance(oc1, StabilityBound) else _at(oc1, d_in)
    b2 = oc2 if isinstance(oc2, StabilityBound) else _at(oc2, d_in)
    if b1.d_in != b2.d_in or b1.d_in != d_in:
        raise BoundMismatch(f"stages certified at different d_in ({b1.d_in} vs {b2.d_in})")
    return StabilityBound(d_in, b1.t_out + b2.t_out)


def linear_stage(slope, intercept=0) -> Callable:
    """The map d -> intercept + slope * d, e.g. 5d for a Laplace stage."""
    return lambda d: intercept + slope * d


# --- deciders ------------------------------------------------------------

@dataclass
class _Ctx:
    program: Program
    limits: Optional[Limits]
    env_for: Optional[Callable]
    cache: dict = field(default_factory=dict)

    def joint(self, x) -> ExactJointDist:
        hit = self.cache.get(x)
        if hit is None:
            env = self.env_for(x) if self.env_for else None
            hit = enumerate_exact(self.program, x, env, self.limits)
            self.cache[x] = hit
        return hit

    def exact(self, x) -> ExactJointDist:
        j = self.joint(x)
        if j.residual:
            raise ResidualMassPresent(f"input {list(x)}: residual mass {j.residual} "
                                      f"({'; '.join(j.diagnostics)})")
        return j


@dataclass(frozen=True)
class StabilityResult:
    t_out: float
    witness: Optional[tuple]
    pairs_checked: int

    def holds_at(self, t):
        return self.t_out <= t


def _pairs(metric, d_in, domain, n_max, n_min, pairs):
    if pairs is not None:
        return list(pairs)
    return list(adjacent_pairs(metric, domain, n_max, d_in, n_min))


def check_timing_stability(program: Program, metric: MetricKind, d_in, domain=(0, 1), n_max=1,
                           limits: Optional[Limits] = None, *, n_min=0, pairs=None,
                           env_for=None) -> StabilityResult:
    """Worst runtime-coupling gap over all adjacent pairs."""
    ctx = _Ctx(program, limits, env_for)
    best, witness = 0, None
    todo = _pairs(metric, d_in, domain, n_max, n_min, pairs)
    for x, x2 in todo:
        g = winf(ctx.exact(x).runtime_marginal(), ctx.exact(x2).runtime_marginal())
        if witness is None or g > best:
            best, witness = g, (x, x2)
    return StabilityResult(best, witness, len(todo))


def check_oc_timing_stability(program: Program, metric: MetricKind, d_in, domain=(0, 1), n_max=1,
                              limits: Optional[Limits] = None, *, n_min=0, pairs=None,
                              env_for=None) -> StabilityResult:
    """Worst gap between runtimes conditioned on a common output; witness (x, x', y)."""
    ctx = _Ctx(program, limits, env_for)
    best, witness = 0, None
    todo = _pairs(metric, d_in, domain, n_max, n_min, pairs)
    for x, x2 in todo:
        b1, b2 = ctx.exact(x).by_output(), ctx.exact(x2).by_output()
        for y in sorted(set(b1) & set(b2)):
            g = winf(b1[y].normalized(), b2[y].normalized())
            if witness is None or g > best:
                best, witness = g, (x, x2, y)
    return StabilityResult(best, witness, len(todo))


def _out_distance(out_metric, y, y2):
    if callable(out_metric) and not isinstance(out_metric, MetricKind):
        return out_metric(y, y2)
    if out_metric is MetricKind.ABS_DIFF and len(y) == 1 and len(y2) == 1:
        return abs(y[0] - y2[0])
    return distance(out_metric, y, y2)


def joint_coupling_exists(j1: ExactJointDist, j2: ExactJointDist, out_metric, d_out, t_out):
    """Max-flow test for a coupling bounding output distance and runtime gap together."""
    p, q = j1.as_table(), j2.as_table()
    return coupling_exists(p, q, lambda u, v: _out_distance(out_metric, u[0], v[0]) <= d_out
                           and abs(u[1] - v[1]) <= t_out)


def _min_t(j1, j2, out_metric, d):
    ts = sorted({abs(u[1] - v[1]) for u in j1.entries for v in j2.entries})
    if not joint_coupling_exists(j1, j2, out_metric, d, ts[-1]):
        return INF
    lo, hi = 0, len(ts) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if joint_coupling_exists(j1, j2, out_metric, d, ts[mid]):
            hi = mid
        else:
            lo = mid + 1
    return ts[lo]


@dataclass(frozen=True)
class JointStabilityResult:
    """Pareto frontier of (d_out, t_out) pairs, each with its worst adjacent pair."""

    frontier: tuple
    witnesses: tuple
    pairs_checked: int

    def admits(self, d_out, t_out):
        return any(d <= d_out and t <= t_out for d, t in self.frontier)


def check_joint_stability(program: Program, metric: MetricKind, d_in, out_metric: MetricKind,
                          domain=(0, 1), n_max=1, limits: Optional[Limits] = None, *, n_min=0,
                          pairs=None, env_for=None) -> JointStabilityResult:
    ctx = _Ctx(program, limits, env_for)
    todo = _pairs(metric, d_in, domain, n_max, n_min, pairs)
    tables = [(x, x2, ctx.exact(x), ctx.exact(x2)) for x, x2 in todo]
    cands = set()
    for _, _, j1, j2 in tables:
        outs1 = {o for o, _ in j1.as_table()}
        outs2 = {o for o, _ in j2.as_table()}
        cands |= {_out_distance(out_metric, u, v) for u in outs1 for v in outs2}
    frontier, witnesses = [], []
    best_t = INF
    for d in sorted(cands):
        worst, wit = 0, None
        for x, x2, j1, j2 in tables:
            t = _min_t(j1, j2, out_metric, d)
            if wit is None or t > worst:
                worst, wit = t, (x, x2)
            if worst == INF:
                break
        if worst < best_t:
            best_t = worst
            frontier.append((d, worst))
            witnesses.append(wit)
    return JointStabilityResult(tuple(frontier), tuple(witnesses), len(todo))


def check_output_stability(program: Program, metric: MetricKind, d_in, out_metric: MetricKind,
                           domain=(0, 1), n_max=1, limits: Optional[Limits] = None, *, n_min=0,
                           pairs=None, env_for=None) -> StabilityResult:
    """Least d_out with an output coupling inside d_out for every adjacent pair."""
    ctx = _Ctx(program, limits, env_for)
    todo = _pairs(metric, d_in, domain, n_max, n_min, pairs)
    best, witness = 0, None
    for x, x2 in todo:
        p, q = ctx.exact(x).output_marginal(), ctx.exact(x2).output_marginal()
        found = INF
        for d in sorted({_out_distance(out_metric, u, v) for u in p for v in q}):
            if coupling_exists(p, q, lambda u, v, d=d: _out_distance(out_metric, u, v) <= d):
                found = d
                break
        if witness is None or found > best:
            best, witness = found, (x, x2)
    return StabilityResult(best, witness, len(todo))


def is_constant_time(program: Program, inputs: Sequence, limits=None, env_for=None) -> bool:
    """Same single runtime on every listed input."""
    ctx = _Ctx(program, limits, env_for)
    seen = set()
    for x in inputs:
        j = ctx.exact(x)
        seen |= {t for _, t in j.as_table()}
        if len(seen) > 1:
            return False
    return True


def is_output_deterministic(program: Program, inputs: Sequence, limits=None, env_for=None) -> bool:
    ctx = _Ctx(program, limits, env_for)
    return all(len(ctx.exact(x).output_marginal()) == 1 for x in inputs)


def linear_runtime_holds(program: Program, n_max: int, domain, t_out: int,
                         limits=None) -> Optional[tuple]:
    """Check Pr[T(x) <= n t_out + t0] >= Pr[T(empty) <= t0] for every x and t0.

    Returns None when it holds, else a counterexample (x, t0).
    """
    base = enumerate_exact(program, (), None, limits).runtime_marginal()
    for n in range(n_max + 1):
        for x in datasets(domain, n, n):
            d = enumerate_exact(program, x, None, limits).runtime_marginal()
            hi = max(d.hi(), base.hi())
            for t0 in range(0, int(hi) + 1):
                if _cdf(d, n * t_out + t0) < _cdf(base, t0):
                    return x, t0
    return None


def _cdf(d: RuntimeDist, t):
    return d.mass() - d.survival(t + 1)


__all__ = ["INF", "JointStabilityResult", "StabilityBound", "StabilityResult",
           "check_joint_stability", "check_oc_timing_stability", "check_output_stability",
           "check_timing_stability", "is_constant_time", "is_output_deterministic",
           "joint_coupling_exists", "linear_runtime_holds", "linear_stage", "stability_chain",
           "stability_compose", "winf", "winf_by_flow"]
