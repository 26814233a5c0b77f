import json
from fractions import Fraction
from pathlib import Path

import pytest
from click.testing import CliRunner

from timingdp import programs as P
from timingdp.cli import main
from timingdp.errors import ConfigError
from timingdp.suite import (load_suite, parse_domain, parse_fraction, parse_program_expr,
                            run_check, run_suite, shipped_suite_path)
from timingdp.vm import emit_program, load_program

LISTINGS = Path(shipped_suite_path()).parent / "listings"


@pytest.fixture
def cli():
    return CliRunner()


def test_run_text_and_json(cli):
    res = cli.invoke(main, ["run", "sum", "--input", "1,2,3"])
    assert res.exit_code == 0 and "runtime 17" in res.output
    res = cli.invoke(main, ["run", "rr", "--input", "1", "--seed", "3", "--format", "json"])
    doc = json.loads(res.output)
    assert doc["runtime"] in (6, 7) and doc["seed"] == 3


def test_run_is_reproducible(cli):
    args = ["run", "delay(shift=4, bound=8)", "--input", "0", "--seed", "5", "--format", "json"]
    assert cli.invoke(main, args).output == cli.invoke(main, args).output


def test_missing_file_is_usage_error(cli):
    res = cli.invoke(main, ["run", "nowhere.ram"])
    assert res.exit_code == 2 and "cannot read" in res.output


def test_bad_expression_is_usage_error(cli):
    assert cli.invoke(main, ["run", "chain(sum)"]).exit_code == 2


def test_sample_single_and_compare(cli):
    res = cli.invoke(main, ["sample", "rr", "--input", "0", "-n", "1", "--format", "json"])
    assert res.exit_code == 0 and sum(json.loads(res.output)["histogram"].values()) == 1
    res = cli.invoke(main, ["sample", "rr", "--input", "0", "-n", "4000", "--compare"])
    assert "total variation" in res.output


def test_enumerate_json(cli):
    res = cli.invoke(main, ["enumerate", "rr", "--input", "0", "--format", "json"])
    doc = json.loads(res.output)
    assert {(tuple(e["output"]), e["runtime"], e["p"]) for e in doc["entries"]} == {
        ((0,), 6, "1/2"), ((1,), 7, "1/2")}
    assert doc["residual"] == "0/1"


def test_certify_delay(cli):
    res = cli.invoke(main, ["certify-delay", "--mu", "20", "--upper", "40", "--t-in", "13",
                            "--e-eps", "2^13"])
    doc = json.loads(res.output)
    assert res.exit_code == 0 and doc["budget"]["delta"] == "1/64"
    bad = cli.invoke(main, ["certify-delay", "--mu", "2", "--upper", "40", "--t-in", "13"])
    assert bad.exit_code == 2 and "PreconditionViolated" in bad.output


def test_emit_round_trip(cli, tmp_path):
    out = tmp_path / "dl.ram"
    assert cli.invoke(main, ["emit", "dl(a=1, b=3)", "--out", str(out)]).exit_code == 0
    assert load_program(out).instructions == P.discrete_laplace(1, 3).instructions


def test_shipped_listings_match_builders():
    for name, prog in [("randomized_response", P.randomized_response()),
                       ("sum", P.sum_program()), ("discrete_laplace", P.discrete_laplace()),
                       ("delay", P.timing_private_delay()), ("dataset_count", P.dataset_count())]:
        assert (LISTINGS / f"{name}.ram").read_text() == emit_program(prog)


def write_cfg(tmp_path, text):
    path = tmp_path / "suite.cfg"
    path.write_text(text)
    return str(path)


def test_verify_empty_suite_passes(cli, tmp_path):
    res = cli.invoke(main, ["verify", write_cfg(tmp_path, "[suite]\nchecks =\n")])
    assert res.exit_code == 0 and json.loads(res.output)["checks"] == []


NEGATIVE = """
[suite]
checks = leak
seed = 1

[check.leak]
type = oc-timing-privacy
program = chain(leaky_identity, truncate)
metric = hamming
domain = 0..2
n_min = 1
e_eps = 1000
{extra}
"""


def test_verify_negative_and_failing(cli, tmp_path):
    res = cli.invoke(main, ["verify", write_cfg(tmp_path, NEGATIVE.format(extra="negative = true"))])
    assert res.exit_code == 0
    assert json.loads(res.output)["checks"][0]["verdict"] == "pass-as-negative"
    res = cli.invoke(main, ["verify", write_cfg(tmp_path, NEGATIVE.format(extra="")),
                            "--format", "text"])
    assert res.exit_code == 1 and res.output.startswith("fail")


def test_verify_bad_config(cli, tmp_path):
    res = cli.invoke(main, ["verify", write_cfg(tmp_path, "[suite]\nchecks = ghost\n")])
    assert res.exit_code == 2
    assert cli.invoke(main, ["verify", str(tmp_path / "absent.cfg")]).exit_code == 2


def test_load_suite_errors():
    with pytest.raises(ConfigError):
        load_suite("[check.x]\ntype = golden\n")
    with pytest.raises(ConfigError):
        load_suite("[suite]\nchecks = x\n[check.x]\ntype = nonsense\n")


def test_value_parsers():
    assert parse_fraction("2^13") == 8192 and parse_fraction("1/64") == Fraction(1, 64)
    assert parse_domain("0..3") == (0, 1, 2, 3) and parse_domain("1,5") == (1, 5)
    prog = parse_program_expr("chain(sum(w=5), dl(a=1, b=2, w=5))")
    assert prog.model.word_bits == 5


def test_file_expression(tmp_path):
    (tmp_path / "rr.ram").write_text(emit_program(P.randomized_response()))
    prog = parse_program_expr("chain(file(rr.ram), identity)", tmp_path)
    assert len(prog) == len(P.randomized_response()) + 2 + len(P.identity_program())


def test_shipped_suite_passes():
    suite = load_suite(Path(shipped_suite_path()).read_text(), shipped_suite_path().parent)
    records = run_suite(suite, jobs=4)
    assert len(records) >= 30
    assert [r.check for r in records if not r.ok] == []


def test_record_json_shape():
    suite = load_suite(NEGATIVE.format(extra="negative = true"))
    (name, sec), = suite.checks
    rec = run_check(name, sec, suite.seed)
    doc = rec.to_json(timings=True)
    assert set(doc) >= {"check", "type", "claim", "verdict", "witness", "pairs_exhausted",
                        "values", "wall_time_s"}
    assert doc["values"]["e_eps_pure"] == "inf"
