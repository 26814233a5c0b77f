from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from timingdp import programs as P
from timingdp.errors import (AssemblyError, IncompatibleEnvironment, InvalidProgram,
                             StepLimitExceeded, UninitializedRead, WordOverflow)
from timingdp.vm import (Environment, Limits, emit_program, enumerate_exact, parse_program,
                         run_sampled, sample_runs, validate_program)

from corpus import make_program

RR = P.randomized_response()


def test_rr_seeds_give_both_branches():
    seen = {run_sampled(RR, (0,), seed=s).runtime for s in range(40)}
    assert seen == {6, 7}


def test_run_is_deterministic_per_seed():
    prog = P.timing_private_delay(1, 2, 4, 8)
    a = [run_sampled(prog, (1,), seed=s) for s in range(20)]
    b = [run_sampled(prog, (1,), seed=s) for s in range(20)]
    assert [(r.output, r.runtime) for r in a] == [(r.output, r.runtime) for r in b]


def test_sum_costs_three_per_row():
    prog = P.sum_program()
    for n in range(6):
        res = run_sampled(prog, tuple(range(n)))
        assert res.runtime == 8 + 3 * n
        assert res.output == (sum(range(n)),)


def test_nop_costs_its_argument():
    prog = parse_program("nop(5)\noutput_ptr = 0\noutput_len = 0\nhalt\n")
    assert run_sampled(prog, ()).runtime == 5 + 2 + 1


def test_validate_flags_bad_goto_and_wide_literal():
    assert any("jump target" in d for d in validate_program(parse_program("goto @7\nhalt\n")))
    wide = parse_program(".model wordram 8\nx = 300\nhalt\n")
    assert any("does not fit" in d for d in validate_program(wide))
    assert validate_program(P.sum_program()) == []


def test_parse_errors_carry_line_numbers():
    with pytest.raises(AssemblyError, match="line 2"):
        parse_program("halt\nx = = 3\n")


def test_bad_shape_rejected():
    with pytest.raises(InvalidProgram):
        parse_program("M[0] = M[1]\nhalt\n")


def test_uninitialized_read_is_an_error_and_goes_to_residual():
    prog = parse_program("x = M[5]\noutput_ptr = 0\noutput_len = 0\nhalt\n")
    with pytest.raises(UninitializedRead):
        run_sampled(prog, ())
    j = enumerate_exact(prog, ())
    assert j.residual == 1 and "UninitializedRead" in j.diagnostics[0]


def test_word_ram_saturates_or_overflows():
    sat = parse_program(".model wordram 8\nx = 255\ny = x + 1\noutput_ptr = 0\n"
                        "output_len = 1\nM[0] = y\nhalt\n")
    assert run_sampled(sat, ()).output == (255,)
    nosat = parse_program(".model wordram 8 nosat\nx = 255\ny = x + 1\nhalt\n")
    with pytest.raises(WordOverflow):
        run_sampled(nosat, ())


def test_ram_subtraction_clamps_at_zero():
    prog = parse_program("x = 2\ny = x - 5\noutput_ptr = 0\noutput_len = 1\nM[0] = y\nhalt\n")
    assert run_sampled(prog, ()).output == (0,)


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        run_sampled(parse_program("L: goto L\n"), (), max_steps=100)


def test_incompatible_environment():
    with pytest.raises(IncompatibleEnvironment):
        run_sampled(RR, (1,), env=Environment.for_input((0,)))


def test_leftover_memory_does_not_change_pure_programs():
    env = Environment.for_input((1, 2), extra={40: 9, 41: 3})
    for prog in (P.sum_program(), P.discrete_laplace(), RR):
        x = (1, 2) if prog is not RR else (1,)
        e = env if prog is not RR else Environment.for_input((1,), extra={7: 7})
        assert enumerate_exact(prog, x, e) == enumerate_exact(prog, x)


def test_assembly_round_trip():
    for prog in (RR, P.sum_program(6), P.discrete_laplace(1, 3), P.timing_private_delay(),
                 P.dataset_count(), P.mean_pipeline()):
        again = parse_program(emit_program(prog))
        assert again.instructions == prog.instructions
        assert again.model == prog.model and again.constants == prog.constants


def test_rand_cap_leaves_exact_residual():
    j = enumerate_exact(P.discrete_laplace(), (3,), limits=Limits(max_rand_branches=12))
    assert j.residual > 0
    assert j.total_mass() == 1


def test_self_loop_becomes_geometric_tail():
    # a Word RAM counter that saturates keeps retrying until the coin says stop
    prog = parse_program(".model wordram 3\nc = 0\nL: c = c + 1\nb = rand(1)\n"
                         "if b == 0 goto L\noutput_ptr = 0\noutput_len = 1\nM[0] = c\nhalt\n")
    j = enumerate_exact(prog, ())
    assert j.residual == 0 and j.has_tails
    assert j.total_mass() == 1
    assert j.output_marginal()[(7,)] == Fraction(1, 64)


def test_limits_parse():
    assert Limits.parse("max_rand_branches=5, summarize_loops=no") == \
        Limits(max_rand_branches=5, summarize_loops=False)
    with pytest.raises(ValueError):
        Limits.parse("bogus=1")


@given(st.integers(0, 10 ** 6), st.integers(0, 1))
def test_samples_lie_in_exact_support(seed, bit):
    prog = make_program(seed)
    table = enumerate_exact(prog, (bit,)).as_table()
    assert sum(table.values()) == 1
    for out in sample_runs(prog, (bit,), 5, seed):
        assert out in table


@given(st.lists(st.integers(0, 5), max_size=5))
def test_sum_runtime_is_data_independent(x):
    j = enumerate_exact(P.sum_program(), tuple(x))
    assert j.as_table() == {((sum(x),), 8 + 3 * len(x)): 1}
