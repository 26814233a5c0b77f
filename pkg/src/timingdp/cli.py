"""Command-line front end (``timingdp``).

Exit codes: 0 when everything passes, 1 when a check fails, 2 for usage,
config or input errors.
"""

from __future__ import annotations

import json
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

import click

from . import suite as S
from .dist_exact import CensorSpec, DiscreteLaplaceParams
from .errors import ConfigError, TimingDPError
from .privacy import certify_delay
from .vm.assembly import emit_program, load_program
from .vm.enumerate import Limits, enumerate_exact
from .vm.machine import run_sampled, sample_runs

USAGE_ERROR = 2


class _Fail(click.ClickException):
    exit_code = USAGE_ERROR


def _limits(text):
    if not text:
        return None
    try:
        return Limits.parse(text)
    except (ValueError, TypeError) as e:
        raise click.BadParameter(str(e), param_hint="--limits") from None


def _program(source):
    """A path to an assembly file, or a builder expression such as ``sum(w=6)``."""
    path = Path(source)
    try:
        if path.suffix == ".ram" or path.exists():
            return load_program(path)
        return S.parse_program_expr(source)
    except OSError as e:
        raise _Fail(f"cannot read {source}: {e.strerror or e}") from None
    except (TimingDPError, ConfigError) as e:
        raise _Fail(str(e)) from None


def _input(text):
    try:
        return S.parse_input(text)
    except ValueError:
        raise click.BadParameter(f"not a list of integers: {text!r}", param_hint="--input")


def _emit(payload, fmt, text_lines, out):
    if fmt == "json":
        body = json.dumps(S.fmt(payload), indent=2) + "\n"
    else:
        body = "\n".join(text_lines) + "\n"
    if out:
        Path(out).write_text(body, encoding="utf-8")
    else:
        click.echo(body, nl=False)


_fmt_opt = click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="text",
                        show_default=True)
_out_opt = click.option("--out", type=click.Path(dir_okay=False), default=None,
                        help="Write the report here instead of standard output.")
_limits_opt = click.option("--limits", default=None,
                           help="Enumeration limits, e.g. 'max_rand_branches=64,max_steps=100000'.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Instruction-counting RAM machine with exact timing-privacy checkers."""


@main.command()
@click.argument("program")
@click.option("--input", "input_", default="", help="Comma-separated input cells.")
@click.option("--seed", type=int, default=0, show_default=True)
@_fmt_opt
@_out_opt
def run(program, input_, seed, fmt, out):
    """Execute PROGRAM once with coins drawn from SEED."""
    prog = _program(program)
    try:
        res = run_sampled(prog, _input(input_), seed=seed)
    except TimingDPError as e:
        raise _Fail(f"{type(e).__name__}: {e}") from None
    payload = {"output": list(res.output), "runtime": res.runtime, "seed": seed}
    _emit(payload, fmt, [f"output  {list(res.output)}", f"runtime {res.runtime}"], out)


@main.command()
@click.argument("program")
@click.option("--input", "input_", default="", help="Comma-separated input cells.")
@click.option("-n", "--samples", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--compare/--no-compare", default=False,
              help="Also report total variation to the exact joint law.")
@_limits_opt
@_fmt_opt
@_out_opt
def sample(program, input_, samples, seed, compare, limits, fmt, out):
    """Runtime histogram over SAMPLES seeded executions."""
    prog = _program(program)
    x = _input(input_)
    try:
        runs = list(sample_runs(prog, x, samples, seed))
    except TimingDPError as e:
        raise _Fail(f"{type(e).__name__}: {e}") from None
    hist = Counter(t for _, t in runs)
    payload = {"samples": samples, "seed": seed,
               "histogram": {str(t): c for t, c in sorted(hist.items())}}
    lines = [f"{t:>8}  {c}" for t, c in sorted(hist.items())]
    if compare:
        exact = enumerate_exact(prog, x, limits=_limits(limits))
        if exact.residual or exact.has_tails:
            raise _Fail("exact law is not a finite table; comparison unavailable")
        table = exact.as_table()
        counts = Counter(runs)
        keys = set(table) | set(counts)
        tvd = sum(abs(Fraction(counts.get(k, 0), samples) - table.get(k, 0)) for k in keys) / 2
        payload["tvd"] = tvd
        lines.append(f"total variation to exact law: {float(tvd):.5f}")
    _emit(payload, fmt, lines, out)


@main.command("enumerate")
@click.argument("program")
@click.option("--input", "input_", default="", help="Comma-separated input cells.")
@_limits_opt
@_fmt_opt
@_out_opt
def enumerate_cmd(program, input_, limits, fmt, out):
    """Exact joint law of (output, runtime)."""
    prog = _program(program)
    try:
        j = enumerate_exact(prog, _input(input_), limits=_limits(limits))
    except TimingDPError as e:
        raise _Fail(f"{type(e).__name__}: {e}") from None
    entries = [{"output": list(o), "runtime": t, "p": p} for (o, t), p in j.entries.items()]
    tails = [{"output": list(o), "ratio": tl.ratio, "period": tl.period,
              "pattern": {str(t): p for t, p in sorted(tl.pattern.items())}}
             for o, ts in j.tails.items() for tl in ts]
    payload = {"entries": entries, "tails": tails, "residual": j.residual,
               "diagnostics": list(j.diagnostics)}
    lines = [f"{list(o)!s:<16} t={t:<6} p={p}" for (o, t), p in j.entries.items()]
    lines += [f"{list(o)!s:<16} tail ratio={tl.ratio} period={tl.period}" for o, ts in
              j.tails.items() for tl in ts]
    lines.append(f"residual {j.residual}")
    lines += [f"note: {d}" for d in j.diagnostics]
    _emit(payload, fmt, lines, out)


@main.command()
@click.argument("config", required=False)
@click.option("--seed", type=int, default=None, help="Override the suite seed.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--timings/--no-timings", default=False, help="Include wall-clock times.")
@_limits_opt
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
@_out_opt
def verify(config, seed, jobs, timings, limits, fmt, out):
    """Run a verification suite (the shipped one when CONFIG is omitted)."""
    path = Path(config) if config else S.shipped_suite_path()
    try:
        suite = S.load_suite_file(path, _limits(limits))
        if seed is not None:
            suite.seed = seed
        records = S.run_suite(suite, jobs)
    except ConfigError as e:
        raise _Fail(str(e)) from None
    if fmt == "json":
        body = S.report_json(records, suite.seed, timings) + "\n"
    else:
        body = S.report_text(records, timings)
    if out:
        Path(out).write_text(body, encoding="utf-8")
    else:
        click.echo(body, nl=False)
    sys.exit(0 if all(r.ok for r in records) else 1)


@main.command("certify-delay")
@click.option("--a", "a", type=int, default=1, show_default=True)
@click.option("--b", "b", type=int, default=2, show_default=True)
@click.option("--mu", type=int, required=True, help="Shift of the Discrete Laplace law.")
@click.option("--upper", "upper", type=int, required=True, help="Censoring bound B.")
@click.option("--offset", type=int, default=0, show_default=True, help="Constant c.")
@click.option("--t-in", "t_in", type=int, required=True)
@click.option("--e-eps", "e_eps", default=None, help="Expected e^eps, checked against (b/a)^t_in.")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
@_out_opt
def certify_delay_cmd(a, b, mu, upper, offset, t_in, e_eps, fmt, out):
    """Certify a censored Discrete Laplace delay for runtime shifts up to T_IN."""
    try:
        target = S.parse_fraction(e_eps) if e_eps is not None else None
        cert = certify_delay(DiscreteLaplaceParams(mu, a, b), CensorSpec(upper, 0, offset),
                             t_in, target)
    except (TimingDPError, ValueError, ZeroDivisionError) as e:
        raise _Fail(f"{type(e).__name__}: {e}") from None
    doc = cert.to_json()
    lines = [f"t_in         {cert.t_in}",
             f"e^eps        {doc['budget']['e_eps']}",
             f"delta bound  {doc['budget']['delta']}",
             f"exact delta  {doc['exact_delta']}"]
    if fmt == "json":
        body = json.dumps(doc, indent=2) + "\n"
        if out:
            Path(out).write_text(body, encoding="utf-8")
        else:
            click.echo(body, nl=False)
    else:
        _emit(doc, "text", lines, out)


@main.command()
@click.argument("program")
@_out_opt
def emit(program, out):
    """Print the assembly listing of a builder expression, e.g. 'delay(shift=4, bound=8)'."""
    prog = _program(program)
    text = emit_program(prog)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
