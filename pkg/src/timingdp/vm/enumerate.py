"""Exact enumeration of the joint (output, runtime) law of a program.

Every ``rand(n)`` branches into n + 1 children of weight 1/(n+1). Sub-results
are memoized on the machine state at rand instructions, restricted to the
registers that are still live there, so converging paths are explored once.
When a branch comes back to the very state it left (a loop whose state stops
changing, e.g. a saturated Word RAM counter) the loop is summarized exactly
as a geometric tail instead of being unrolled. A cap on the number of rand
instructions executed along a path bounds the search; pruned mass is kept
in ``residual``.
"""

from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from ..errors import StepLimitExceeded, UnsupportedTail, VMError
from ..runtime_dist import ONE, ZERO, RuntimeDist, Tail
from .analysis import live_registers
from .isa import Program
from .machine import (AT_RAND, DEFAULT_MAX_STEPS, HALTED, Environment, _read, compile_program,
                      initial_state, read_output, run_segment)


@dataclass(frozen=True)
class Limits:
    max_rand_branches: int = 64
    max_steps: int = DEFAULT_MAX_STEPS
    summarize_loops: bool = True

    def __post_init__(self):
        if self.max_rand_branches < 0 or self.max_steps < 1:
            raise ValueError("limits must be positive")

    @classmethod
    def parse(cls, text: str) -> "Limits":
        """Parse ``key=value,key=value`` as used on the command line."""
        kwargs = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, value = part.partition("=")
            key = key.strip().replace("-", "_")
            if key not in ("max_rand_branches", "max_steps", "summarize_loops"):
                raise ValueError(f"unknown limit {key!r}")
            if key == "summarize_loops":
                kwargs[key] = value.strip().lower() in ("1", "true", "yes", "on")
            else:
                kwargs[key] = int(value)
        return cls(**kwargs)


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class ExactJointDist:
    """Joint law of (output tuple, runtime) as exact rationals.

    ``entries`` holds finitely many atoms; ``tails`` maps an output to the
    geometric tails of its runtime law (empty for bounded programs).
    ``entries`` + tail masses + ``residual`` sum to exactly 1.
    """

    entries: Mapping = field(default_factory=dict)
    residual: Fraction = ZERO
    tails: Mapping = field(default_factory=dict)
    diagnostics: tuple = ()

    @property
    def has_tails(self):
        return any(self.tails.values())

    def outputs(self):
        outs = {o for (o, _) in self.entries}
        outs |= {o for o, ts in self.tails.items() if ts}
        return sorted(outs)

    def by_output(self) -> dict:
        """Output -> sub-probability runtime law."""
        atoms: dict = {}
        for (o, t), p in self.entries.items():
            atoms.setdefault(o, {})[t] = p
        out = {}
        for o in self.outputs():
            out[o] = RuntimeDist(atoms.get(o, {}), self.tails.get(o, ()))
        return out

    def output_marginal(self) -> dict:
        return {o: d.mass() for o, d in self.by_output().items()}

    def runtime_marginal(self) -> RuntimeDist:
        total = RuntimeDist()
        for d in self.by_output().values():
            total = total + d
        return total

    def conditional_runtime(self, output) -> RuntimeDist:
        output = tuple(output)
        d = self.by_output().get(output)
        if d is None:
            raise KeyError(f"output {output} has zero probability")
        return d.normalized()

    def total_mass(self):
        return (sum(self.entries.values(), ZERO)
                + sum((t.mass for ts in self.tails.values() for t in ts), ZERO)
                + self.residual)

    def as_table(self):
        """Finite (output, runtime) -> probability table; tails must be absent."""
        if self.has_tails:
            raise UnsupportedTail("distribution has infinite support")
        return dict(sorted(self.entries.items()))


class _Sub:
    """Accumulator for a sub-distribution keyed by output, runtimes relative."""

    __slots__ = ("flat", "tails")

    def __init__(self):
        self.flat = {}
        self.tails = {}

    def add_point(self, out, t, w):
        key = (out, t)
        self.flat[key] = self.flat.get(key, ZERO) + w

    def add_shifted(self, other: "_Sub", w, d):
        flat = self.flat
        for (o, t), p in other.flat.items():
            key = (o, t + d)
            flat[key] = flat.get(key, ZERO) + w * p
        for o, ts in other.tails.items():
            mine = self.tails.setdefault(o, [])
            mine.extend(tail.shift(d).scale(w) for tail in ts)

    def geometric(self, ratio, period):
        """Close a self-loop: sum_k ratio^k shift(self, k*period)."""
        if any(self.tails.values()):
            raise UnsupportedTail("loop body already contains a summarized loop")
        patterns: dict = {}
        for (o, t), p in self.flat.items():
            patterns.setdefault(o, {})[t] = p
        out = _Sub()
        for o, pat in patterns.items():
            out.tails[o] = [Tail(pat, ratio, period)]
        return out


@dataclass
class _Node:
    sub: _Sub
    residual: Fraction
    depth: int
    exact: bool
    budget: int


class _Enumerator:
    def __init__(self, program: Program, limits: Limits):
        self.program = program
        self.compiled = compile_program(program)
        self.code = self.compiled.code
        self.word_max = self.compiled.word_max
        self.live = live_registers(program)
        self.limits = limits
        self.memo = {}
        self.stack = set()
        self.diag = Counter()

    def key(self, pc, regs, mem):
        return (pc, tuple(regs.get(r) for r in self.live[pc]), tuple(sorted(mem.items())))

    def segment(self, regs, mem, pc):
        """Run deterministically; returns ('halt', out, cost) | ('rand', pc, cost) | ('error', msg, 0)."""
        try:
            status, pc, cost, _ = run_segment(self.compiled, regs, mem, pc, self.limits.max_steps)
            if status == HALTED:
                return "halt", read_output(regs, mem, self.word_max), cost
            return "rand", pc, cost
        except StepLimitExceeded as e:
            return "error", f"step limit: {e}", 0
        except VMError as e:
            return "error", f"{type(e).__name__}: {e}", 0

    def explore(self, key, pc, regs, mem, budget) -> _Node:
        hit = self.memo.get(key)
        if hit is not None and ((hit.exact and hit.depth <= budget) or hit.budget == budget):
            return hit
        self.stack.add(key)
        try:
            node = self._explore(key, pc, regs, mem, budget)
        finally:
            self.stack.discard(key)
        if node is not None:
            self.memo[key] = node
        return node

    def _explore(self, key, pc, regs, mem, budget):
        opc, dst, args, _, _ = self.code[pc]
        acc = _Sub()
        residual = ZERO
        try:
            n = _read(args[0], regs, mem, self.word_max)
        except VMError as e:
            self.diag[f"{type(e).__name__}: {e}"] += 1
            return _Node(acc, ONE, 0, True, budget)
        w = Fraction(1, n + 1)
        depth = 0
        exact = True
        returns = []
        for k in range(n + 1):
            r2 = dict(regs)
            m2 = dict(mem)
            r2[dst[1]] = k
            kind, what, cost = self.segment(r2, m2, pc + 1)
            cost += 1
            if kind == "halt":
                acc.add_point(what, cost, w)
            elif kind == "error":
                self.diag[what] += 1
                residual += w
            else:
                key2 = self.key(what, r2, m2)
                if key2 == key and self.limits.summarize_loops:
                    returns.append((w, cost))
                elif key2 in self.stack or key2 == key:
                    self.diag["loop not summarized"] += 1
                    residual += w
                    exact = False
                elif budget <= 1:
                    self.diag["rand branch cap reached"] += 1
                    residual += w
                    exact = False
                else:
                    child = self.explore(key2, what, r2, m2, budget - 1)
                    acc.add_shifted(child.sub, w, cost)
                    residual += w * child.residual
                    depth = max(depth, child.depth + 1)
                    exact = exact and child.exact
        if returns:
            ratio = sum((r for r, _ in returns), ZERO)
            periods = {c for _, c in returns}
            if ratio == 1:
                self.diag["loop never exits"] += 1
                residual += ratio
            elif len(periods) == 1:
                try:
                    acc = acc.geometric(ratio, periods.pop())
                    residual = residual / (1 - ratio)
                except UnsupportedTail:
                    self.diag["nested loop not summarized"] += 1
                    residual += ratio
                    exact = False
            else:
                self.diag["loop with several periods not summarized"] += 1
                residual += ratio
                exact = False
        return _Node(acc, residual, depth + 1, exact, budget)

    def run(self, values, env) -> ExactJointDist:
        regs, mem = initial_state(self.program, values, env)
        kind, what, cost = self.segment(regs, mem, 0)
        if kind == "halt":
            return ExactJointDist({(what, cost): ONE}, ZERO, {}, ())
        if kind == "error":
            self.diag[what] += 1
            return ExactJointDist({}, ONE, {}, self._diags())
        if self.limits.max_rand_branches < 1:
            self.diag["rand branch cap reached"] += 1
            return ExactJointDist({}, ONE, {}, self._diags())
        node = self.explore(self.key(what, regs, mem), what, regs, mem,
                            self.limits.max_rand_branches)
        entries = {}
        for (o, t), p in node.sub.flat.items():
            if p:
                entries[(o, t + cost)] = p
        tails = {}
        for o, ts in node.sub.tails.items():
            merged = RuntimeDist({}, [tail.shift(cost) for tail in ts]).tails
            if merged:
                tails[o] = merged
        return ExactJointDist(dict(sorted(entries.items())), node.residual, tails, self._diags())

    def _diags(self):
        return tuple(f"{msg} (x{count})" for msg, count in sorted(self.diag.items()))


_cache: dict = {}
_CACHE_SIZE = 4096


def enumerate_exact(program: Program, values: Sequence[int], env: Optional[Environment] = None,
                    limits: Optional[Limits] = None) -> ExactJointDist:
    """Exact joint law of (output, runtime) for one input.

    Raises IncompatibleEnvironment when ``env`` does not hold ``values``.
    """
    limits = limits or DEFAULT_LIMITS
    values = tuple(int(v) for v in values)
    env_key = None if env is None else env.frozen()
    cache_key = (program, values, env_key, limits)
    hit = _cache.get(cache_key)
    if hit is not None:
        return hit
    en = _Enumerator(program, limits)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * limits.max_rand_branches + 2000))
    try:
        result = en.run(values, env)
    finally:
        sys.setrecursionlimit(old)
    if len(_cache) >= _CACHE_SIZE:
        _cache.clear()
    _cache[cache_key] = result
    return result
