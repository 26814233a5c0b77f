from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from timingdp import programs as P
from timingdp.dist_exact import CensorSpec, DiscreteLaplaceParams, censored_dl_dist
from timingdp.errors import CompositionConventionViolated, InvalidParameters, ModelMismatch
from timingdp.vm import Limits, enumerate_exact, run_sampled


def runtime(prog, x):
    return enumerate_exact(prog, x).runtime_marginal().support()


def test_rr_table_both_inputs():
    for x in (0, 1):
        assert enumerate_exact(P.randomized_response(), (x,)).as_table() == {
            ((x,), 6): Fraction(1, 2), ((1 - x,), 7): Fraction(1, 2)}


def test_count_is_constant_time():
    prog = P.dataset_count()
    assert enumerate_exact(prog, (1, 2, 7)).as_table() == {((7, 2), 4): 1}
    assert {runtime(prog, (0,) * n)[0] for n in range(1, 6)} == {4}


def test_dl_conditional_runtime():
    j = enumerate_exact(P.discrete_laplace(1, 2), (4,), limits=Limits(max_rand_branches=20))
    for (y,), d in j.by_output().items():
        if y > 0:
            assert d.normalized().as_dict() == {15 + 5 * abs(4 - y): 1}


def test_dl_zero_noise_mass():
    # sign and magnitude coins: N = 0 has probability (b - a) / (b + a)
    j = enumerate_exact(P.discrete_laplace(1, 2), (5,), limits=Limits(max_rand_branches=20))
    assert j.output_marginal()[(5,)] == Fraction(1, 3)


def test_delay_keeps_input_and_has_censored_law():
    prog = P.timing_private_delay(1, 3, 2, 5)
    j = enumerate_exact(prog, (4, 4))
    assert j.outputs() == [(4, 4)]
    ref = censored_dl_dist(DiscreteLaplaceParams(2, 1, 3), CensorSpec(7, 0, 16 + 7 * 5))
    assert j.runtime_marginal() == ref


def test_builder_parameter_checks():
    with pytest.raises(InvalidParameters):
        P.discrete_laplace(2, 2)
    with pytest.raises(InvalidParameters):
        P.timing_private_delay(1, 2, shift=5, bound=4)
    with pytest.raises(InvalidParameters):
        P.discrete_laplace(3, 30, word_bits=5)
    with pytest.raises(InvalidParameters):
        P.build(P.ProgramSpec(P.Kind.DATASET_COUNT, append_input=True))


def test_chain_adds_overhead():
    s = P.sum_program()
    for x in ((), (1,), (3, 4, 5)):
        t = runtime(P.chain(s, s), x)[0]
        assert t == runtime(s, x)[0] + runtime(s, (sum(x),))[0] + P.CHAIN_OVERHEAD


def test_chain_renames_colliding_registers():
    s = P.sum_program()
    spliced = P.chain(s, s)
    assert spliced.registers() > s.registers()
    assert run_sampled(spliced, (2, 3)).output == (5,)


def test_chain_with_identity_keeps_law():
    s = P.chain(P.sum_program(), P.discrete_laplace())
    lim = Limits(max_rand_branches=12)
    j1 = enumerate_exact(s, (1, 2), limits=lim)
    j2 = enumerate_exact(P.chain(s, P.identity_program()), (1, 2), limits=lim)
    assert j1.output_marginal() == j2.output_marginal()
    assert j1.residual == j2.residual


def test_model_mismatch():
    with pytest.raises(ModelMismatch):
        P.chain(P.sum_program(), P.discrete_laplace(word_bits=6))


def test_compose_needs_append_input():
    with pytest.raises(CompositionConventionViolated):
        P.compose(P.sum_program(), P.dataset_count())


def test_compose_outputs_pair_and_adds_runtimes():
    s = P.sum_program(append_input=True)
    c = P.compose(s, P.dataset_count())
    x = (1, 2, 3)
    assert run_sampled(s, x).output == (1, 2, 3, 6)
    assert enumerate_exact(c, x).as_table() == {
        ((6, 3), runtime(s, x)[0] + 4 + P.COMPOSE_OVERHEAD): 1}


def test_mean_pipeline_outputs_noisy_sum_and_count():
    j = enumerate_exact(P.mean_pipeline(), (1, 2), limits=Limits(max_rand_branches=8))
    assert all(len(o) == 2 for o in j.outputs())
    assert j.output_marginal()[(3, 2)] == Fraction(1, 9)


def test_listings_carry_line_notes():
    assert all(ins.note for ins in P.randomized_response().instructions)


@given(st.lists(st.integers(0, 3), max_size=4))
def test_append_sum_appends(x):
    out = run_sampled(P.sum_program(append_input=True), tuple(x)).output
    assert out == tuple(x) + (sum(x),)


@given(st.lists(st.integers(0, 9), max_size=6), st.integers(4, 8))
def test_word_ram_sum_saturates(x, w):
    out = run_sampled(P.sum_program(word_bits=w), tuple(v % (1 << w) for v in x)).output
    assert out == (min(sum(v % (1 << w) for v in x), (1 << w) - 1),)
