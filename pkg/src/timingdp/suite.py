"""Verification suites: INI configs, program expressions, checks and JSON reports.

A suite file looks like::

    [suite]
    checks = rr-oc, sum-joint
    seed = 7

    [check.rr-oc]
    type = oc-timing-stability
    claim = randomized response is (1 -> 1)-OC timing stable
    program = randomized_response
    metric = hamming
    domain = 0..1
    n_min = 1
    n_max = 1
    expect_t_out = 1

Program expressions are builder calls such as ``sum(w=6)``,
``chain(sum, discrete_laplace(a=1, b=2, w=6))`` or ``file(path/to/prog.ram)``.
"""

from __future__ import annotations

import configparser
import json
import re
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import programs as P
from .coupling import INF
from .dist_exact import CensorSpec, DiscreteLaplaceParams, censored_dl_dist
from .errors import ConfigError, TimingDPError
from .metrics import MetricKind
from .privacy import (PrivacyBudget, certify_delay, check_joint_privacy, check_oc_timing_privacy,
                      check_output_dp)
from .stability import (StabilityBound, check_joint_stability, check_oc_timing_stability,
                        check_timing_stability, linear_runtime_holds, linear_stage,
                        stability_chain, stability_compose)
from .vm.assembly import load_program
from .vm.enumerate import Limits, enumerate_exact
from .vm.isa import Program
from .vm.machine import sample_runs

# --- program expressions -------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|(,)|(=)|([^\s(),=]+))")

_BUILDERS = {
    "randomized_response": (P.randomized_response, {"w": "word_bits"}),
    "rr": (P.randomized_response, {"w": "word_bits"}),
    "sum": (P.sum_program, {"w": "word_bits", "append": "append_input"}),
    "discrete_laplace": (P.discrete_laplace, {"w": "word_bits", "append": "append_input"}),
    "dl": (P.discrete_laplace, {"w": "word_bits", "append": "append_input"}),
    "delay": (P.timing_private_delay, {"w": "word_bits"}),
    "dataset_count": (P.dataset_count, {"w": "word_bits"}),
    "count": (P.dataset_count, {"w": "word_bits"}),
    "identity": (P.identity_program, {"w": "word_bits"}),
    "leaky_identity": (P.leaky_identity, {"w": "word_bits"}),
    "truncate": (P.truncate_program, {"w": "word_bits"}),
    "mean": (P.mean_pipeline, {"w": "word_bits"}),
}


def _value(text):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if re.fullmatch(r"\d+", text):
        return int(text)
    return text


class _ExprParser:
    def __init__(self, text, base: Optional[Path]):
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ConfigError(f"cannot read program expression {text!r}")
            self.toks.append(next(g for g in m.groups() if g is not None))
            pos = m.end()
        self.i = 0
        self.base = base
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise ConfigError(f"malformed program expression {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> Program:
        prog = self.expr()
        if self.peek() is not None:
            raise ConfigError(f"trailing text in program expression {self.text!r}")
        return prog

    def expr(self) -> Program:
        name = self.take()
        args, kwargs = [], {}
        if self.peek() == "(":
            self.take("(")
            while self.peek() != ")":
                if self.i + 1 < len(self.toks) and self.toks[self.i + 1] == "=":
                    key = self.take()
                    self.take("=")
                    kwargs[key] = _value(self.take())
                elif name == "file":
                    args.append(self.take())
                else:
                    args.append(self.expr())
                if self.peek() == ",":
                    self.take(",")
            self.take(")")
        return self.build(name, args, kwargs)

    def build(self, name, args, kwargs):
        if name in ("chain", "compose"):
            if len(args) != 2 or kwargs:
                raise ConfigError(f"{name} takes two programs")
            return (P.chain if name == "chain" else P.compose)(*args)
        if name == "file":
            if len(args) != 1:
                raise ConfigError("file takes one path")
            path = Path(args[0])
            if not path.is_absolute() and self.base is not None:
                path = self.base / path
            return load_program(path)
        if name not in _BUILDERS:
            raise ConfigError(f"unknown program {name!r}")
        fn, aliases = _BUILDERS[name]
        if args:
            raise ConfigError(f"{name} takes keyword parameters only")
        try:
            return fn(**{aliases.get(k, k): v for k, v in kwargs.items()})
        except TypeError as e:
            raise ConfigError(f"bad parameters for {name}: {e}") from None


def parse_program_expr(text: str, base: Optional[Path] = None) -> Program:
    return _ExprParser(text, base).parse()


# --- values ----------------------------------------------------------------

def fmt(v):
    """JSON-safe rendering: rationals as "p/q", infinity as "inf"."""
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return "inf" if v == INF else repr(v)
    if isinstance(v, (list, tuple)):
        return [fmt(x) for x in v]
    if isinstance(v, dict):
        return {str(k): fmt(x) for k, x in v.items()}
    return v


def parse_fraction(text):
    text = str(text).strip()
    if text in ("inf", "infinity"):
        return INF
    m = re.fullmatch(r"(\d+)\s*\^\s*(\d+)", text)
    if m:
        return Fraction(int(m.group(1))) ** int(m.group(2))
    return Fraction(text)


def parse_domain(text):
    text = str(text).strip()
    m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
    if m:
        return tuple(range(int(m.group(1)), int(m.group(2)) + 1))
    return tuple(int(v) for v in text.split(",") if v.strip())


def parse_input(text):
    text = str(text).strip().strip("[]")
    return tuple(int(v) for v in re.split(r"[\s,]+", text) if v)


# --- checks ----------------------------------------------------------------

@dataclass
class CheckRecord:
    check: str
    kind: str
    claim: str
    verdict: str
    witness: object = None
    exhausted: Optional[int] = None
    values: dict = field(default_factory=dict)
    wall_time: Optional[float] = None

    @property
    def ok(self):
        return self.verdict in ("pass", "pass-as-negative")

    def to_json(self, timings=False):
        out = {"check": self.check, "type": self.kind, "claim": self.claim,
               "verdict": self.verdict, "witness": fmt(self.witness),
               "pairs_exhausted": self.exhausted, "values": fmt(self.values)}
        if timings and self.wall_time is not None:
            out["wall_time_s"] = round(self.wall_time, 3)
        return out


class _Section:
    """Typed access to one [check.NAME] section."""

    def __init__(self, name, data, base, default_limits):
        self.name = name
        self.data = dict(data)
        self.base = base
        self.default_limits = default_limits
        self.used = set()

    def get(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def need(self, key):
        v = self.get(key)
        if v is None:
            raise ConfigError(f"[check.{self.name}] needs '{key}'")
        return v

    def int(self, key, default=None):
        v = self.get(key)
        return default if v is None else int(v)

    def frac(self, key, default=None):
        v = self.get(key)
        return default if v is None else parse_fraction(v)

    def bool(self, key, default=False):
        v = self.get(key)
        return default if v is None else str(v).lower() in ("1", "true", "yes", "on")

    def program(self, key="program"):
        return parse_program_expr(self.need(key), self.base)

    def metric(self, key="metric"):
        return MetricKind.parse(self.need(key))

    def limits(self):
        text = self.get("limits")
        return Limits.parse(text) if text else self.default_limits

    def quantifier(self):
        return dict(domain=parse_domain(self.need("domain")), n_max=self.int("n_max", 1),
                    limits=self.limits(), n_min=self.int("n_min", 0))


def _verdict(ok, negative):
    if negative:
        return "pass-as-negative" if not ok else "fail"
    return "pass" if ok else "fail"


def _compare(measured, expected, mode):
    if mode == "at_most":
        return measured <= expected
    return measured == expected


def _golden(sec: _Section):
    which = sec.need("which")
    lim = sec.limits()
    seen = {}
    ok = True
    if which == "randomized_response":
        prog = P.randomized_response()
        for x in (0, 1):
            table = enumerate_exact(prog, (x,), limits=lim).as_table()
            want = {((x,), 6): Fraction(1, 2), ((1 - x,), 7): Fraction(1, 2)}
            seen[str(x)] = {f"{o}@{t}": p for (o, t), p in table.items()}
            ok &= table == want
    elif which == "sum":
        prog = P.sum_program()
        for n in range(sec.int("n_max", 4) + 1):
            rt = enumerate_exact(prog, (1,) * n, limits=lim).runtime_marginal().support()
            seen[str(n)] = rt
            ok &= rt == [8 + 3 * n]
    elif which == "dataset_count":
        prog = P.dataset_count()
        for n in range(1, sec.int("n_max", 4) + 1):
            rt = enumerate_exact(prog, (1,) * n, limits=lim).runtime_marginal().support()
            seen[str(n)] = rt
            ok &= rt == [4]
    elif which == "discrete_laplace":
        a, b, w = sec.int("a", 1), sec.int("b", 2), sec.int("w", 5)
        prog = P.discrete_laplace(a, b, w)
        wm = (1 << w) - 1
        for x in parse_domain(sec.get("domain", "0..3")):
            for (y,), d in enumerate_exact(prog, (x,), limits=lim).by_output().items():
                if 0 < y < wm:
                    ok &= d.normalized().as_dict() == {15 + 5 * abs(x - y): 1}
                else:
                    ok &= d.normalized().lo() == 15 + 5 * abs(x - y)
            seen[str(x)] = "checked"
    elif which == "chain":
        p1, p2 = P.sum_program(), P.sum_program()
        spliced = P.chain(p1, p2)
        for n in range(sec.int("n_max", 3) + 1):
            x = tuple(range(n))
            t1 = enumerate_exact(p1, x, limits=lim).runtime_marginal().support()[0]
            t2 = enumerate_exact(p2, (sum(x),), limits=lim).runtime_marginal().support()[0]
            t = enumerate_exact(spliced, x, limits=lim).runtime_marginal().support()[0]
            seen[str(n)] = t - t1 - t2
            ok &= t - t1 - t2 == P.CHAIN_OVERHEAD
    else:
        raise ConfigError(f"unknown golden listing {which!r}")
    return ok, None, None, {"which": which, "observed": seen}


def _stability(sec: _Section, oc: bool):
    prog, metric = sec.program(), sec.metric()
    fn = check_oc_timing_stability if oc else check_timing_stability
    res = fn(prog, metric, sec.frac("d_in", 1), **sec.quantifier())
    want = sec.frac("expect_t_out")
    ok = _compare(res.t_out, want, sec.get("mode", "exact"))
    return ok, res.witness, res.pairs_checked, {"t_out": res.t_out, "expect_t_out": want}


def _joint(sec: _Section):
    prog, metric = sec.program(), sec.metric()
    res = check_joint_stability(prog, metric, sec.frac("d_in", 1),
                                MetricKind.parse(sec.get("out_metric", "abs_diff")),
                                **sec.quantifier())
    d, t = sec.frac("expect_d_out"), sec.frac("expect_t_out")
    ok = res.admits(d, t)
    return ok, list(res.witnesses), res.pairs_checked, {"frontier": [list(p) for p in res.frontier],
                                                        "expect": [d, t]}


def _privacy(sec: _Section, fn):
    prog, metric = sec.program(), sec.metric()
    budget = PrivacyBudget(sec.frac("e_eps", 1), sec.frac("delta", 0))
    res = fn(prog, metric, sec.frac("d_in", 1), budget=budget, **sec.quantifier())
    return res.passed, res.witness, res.pairs_checked, {
        "e_eps": budget.e_eps, "delta": budget.delta, "delta_needed": res.delta_needed,
        "e_eps_pure": res.e_eps_pure}


def _certify(sec: _Section):
    a, b, mu, t_in = sec.int("a", 1), sec.int("b", 2), sec.int("mu"), sec.int("t_in")
    cs = CensorSpec(sec.int("upper"), 0, sec.int("offset", 0))
    cert = certify_delay(DiscreteLaplaceParams(mu, a, b), cs, t_in, sec.frac("e_eps"))
    want = sec.frac("expect_delta")
    ok = want is None or cert.budget.delta == want
    return ok, None, None, cert.to_json()


def _delay_law(sec: _Section):
    a, b, shift, bound = sec.int("a", 1), sec.int("b", 2), sec.int("shift"), sec.int("bound")
    prog = P.timing_private_delay(a, b, shift, bound, sec.int("w"))
    j = enumerate_exact(prog, parse_input(sec.get("input", "0")), limits=sec.limits())
    ref = censored_dl_dist(DiscreteLaplaceParams(shift, a, b),
                           CensorSpec(shift + bound, 0, 16 + 7 * bound))
    got = j.runtime_marginal()
    ok = j.residual == 0 and got == ref
    return ok, None, None, {"c": 16 + 7 * bound, "B": shift + bound, "residual": j.residual}


def _calculus(sec: _Section):
    op = sec.need("op")
    if op == "chain":
        first = StabilityBound(sec.frac("d_in", 1), sec.frac("t1"), sec.frac("d1"))
        second = linear_stage(sec.frac("slope"), sec.frac("intercept", 0))
        got = stability_chain(first, second).t_out
    elif op == "compose":
        d = sec.frac("d_in", 1)
        got = stability_compose(StabilityBound(d, sec.frac("t1")),
                                StabilityBound(d, sec.frac("t2"))).t_out
    else:
        raise ConfigError(f"unknown calculus op {op!r}")
    want = sec.frac("expect_t_out")
    return got == want, None, None, {"t_out": got, "expect_t_out": want}


def _linear(sec: _Section):
    prog = sec.program()
    bad = linear_runtime_holds(prog, sec.int("n_max", 4), parse_domain(sec.need("domain")),
                               sec.int("t_out"), sec.limits())
    return bad is None, bad, None, {"t_out": sec.int("t_out")}


def _monte_carlo(sec: _Section, seed):
    prog = sec.program()
    x = parse_input(sec.need("input"))
    n = sec.int("samples", 100000)
    exact = enumerate_exact(prog, x, limits=sec.limits())
    tvd = monte_carlo_tvd(prog, x, n, seed, exact)
    bound = sec.frac("max_tvd", Fraction(1, 50))
    return tvd <= bound, None, None, {"samples": n, "tvd": tvd, "max_tvd": bound}


def monte_carlo_tvd(prog, x, n, seed, exact=None):
    """Total variation between n seeded samples and the exact joint law (exact fraction)."""
    exact = exact or enumerate_exact(prog, x)
    table = exact.as_table()
    counts = Counter(sample_runs(prog, x, n, seed))
    keys = set(table) | set(counts)
    return sum(abs(Fraction(counts.get(k, 0), n) - table.get(k, 0)) for k in keys) / 2


_KINDS = {
    "golden": lambda s, seed: _golden(s),
    "timing-stability": lambda s, seed: _stability(s, False),
    "oc-timing-stability": lambda s, seed: _stability(s, True),
    "joint-stability": lambda s, seed: _joint(s),
    "output-dp": lambda s, seed: _privacy(s, check_output_dp),
    "oc-timing-privacy": lambda s, seed: _privacy(s, check_oc_timing_privacy),
    "joint-privacy": lambda s, seed: _privacy(s, check_joint_privacy),
    "certify-delay": lambda s, seed: _certify(s),
    "delay-law": lambda s, seed: _delay_law(s),
    "calculus": lambda s, seed: _calculus(s),
    "linear-runtime": lambda s, seed: _linear(s),
    "monte-carlo": _monte_carlo,
}

CHECK_TYPES = tuple(_KINDS)


@dataclass
class Suite:
    checks: list          # (name, _Section)
    seed: int = 0


def load_suite(text: str, base: Optional[Path] = None,
               default_limits: Optional[Limits] = None) -> Suite:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"bad config: {e}") from None
    if not cp.has_section("suite"):
        raise ConfigError("config needs a [suite] section")
    names = [n.strip() for n in cp.get("suite", "checks", fallback="").split(",") if n.strip()]
    try:
        seed = cp.getint("suite", "seed", fallback=0)
    except ValueError:
        raise ConfigError("seed must be an integer") from None
    limits = default_limits or Limits()
    if cp.has_option("suite", "limits"):
        limits = Limits.parse(cp.get("suite", "limits"))
    checks = []
    for name in names:
        sect = f"check.{name}"
        if not cp.has_section(sect):
            raise ConfigError(f"check {name!r} has no [{sect}] section")
        data = dict(cp.items(sect))
        if data.get("type") not in _KINDS:
            raise ConfigError(f"check {name!r}: unknown type {data.get('type')!r}")
        checks.append((name, _Section(name, data, base, limits)))
    return Suite(checks, seed)


def load_suite_file(path, default_limits=None) -> Suite:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    return load_suite(text, path.parent, default_limits)


def run_check(name: str, sec: _Section, seed: int) -> CheckRecord:
    kind = sec.get("type")
    claim = sec.get("claim", "")
    negative = sec.bool("negative")
    start = time.perf_counter()
    try:
        ok, witness, exhausted, values = _KINDS[kind](sec, seed)
        verdict = _verdict(bool(ok), negative)
    except ConfigError:
        raise
    except (TimingDPError, ValueError) as e:
        verdict, witness, exhausted, values = "fail", None, None, {"error": str(e)}
    return CheckRecord(name, kind, claim, verdict, witness, exhausted, values,
                       time.perf_counter() - start)


def _run_one(args):
    name, sec, seed = args
    return run_check(name, sec, seed)


def run_suite(suite: Suite, jobs: int = 1) -> list:
    work = [(name, sec, suite.seed) for name, sec in suite.checks]
    if jobs <= 1 or len(work) <= 1:
        return [_run_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, work))


def report_json(records, seed, timings=False) -> str:
    body = {"seed": seed, "passed": all(r.ok for r in records),
            "checks": [r.to_json(timings) for r in records]}
    return json.dumps(body, indent=2, sort_keys=False)


def report_text(records, timings=False) -> str:
    lines = []
    for r in records:
        extra = f"  ({r.wall_time:.2f}s)" if timings and r.wall_time is not None else ""
        lines.append(f"{r.verdict:<17} {r.check:<28} {r.claim}{extra}")
    lines.append(f"{sum(r.ok for r in records)}/{len(records)} checks passed")
    return "\n".join(lines) + "\n"


def shipped_suite_path() -> Path:
    return Path(__file__).with_name("data") / "reference-suite.cfg"


__all__ = ["CHECK_TYPES", "CheckRecord", "Suite", "fmt", "load_suite", "load_suite_file",
           "monte_carlo_tvd", "parse_domain", "parse_fraction", "parse_input",
           "parse_program_expr", "report_json", "report_text", "run_check", "run_suite",
           "shipped_suite_path"]
