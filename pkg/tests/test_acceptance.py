"""The eleven acceptance criteria, one test each.

Run alone with ``pytest tests/test_acceptance.py``; the terminal summary ends
with one PASS/FAIL line per criterion.
"""

import time
from fractions import Fraction

import pytest

from corpus import corpus
import implications
from timingdp import programs as P
from timingdp.coupling import INF
from timingdp.dist_exact import CensorSpec, DiscreteLaplaceParams, censored_dl_dist, censored_dl_pmf
from timingdp.metrics import MetricKind
from timingdp.privacy import (PrivacyBudget, certify_delay, check_oc_timing_privacy,
                              check_output_dp)
from timingdp.stability import check_joint_stability, check_oc_timing_stability, linear_runtime_holds
from timingdp.suite import monte_carlo_tvd
from timingdp.vm import Limits, enumerate_exact

H, ID, ABS = MetricKind.HAMMING, MetricKind.INSERT_DELETE, MetricKind.ABS_DIFF


@pytest.fixture(scope="module")
def programs():
    return corpus()


class _Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f}s, budget {self.limit}s"


@pytest.mark.criterion(1, "randomized response law and (1 -> 1)-OC timing stability")
def test_c01_randomized_response():
    with _Clock(1):
        rr = P.randomized_response()
        table = enumerate_exact(rr, (0,)).as_table()
        assert table == {((0,), 6): Fraction(1, 2), ((1,), 7): Fraction(1, 2)}
        res = check_oc_timing_stability(rr, H, 1, domain=(0, 1), n_min=1, n_max=1)
        assert res.t_out == 1


@pytest.mark.criterion(2, "sum is (1 -> {Delta, 3}) jointly stable, Delta <= 3, n <= 4")
def test_c02_sum_joint_stability():
    with _Clock(10):
        prog = P.sum_program()
        for delta in range(4):
            res = check_joint_stability(prog, ID, 1, ABS, domain=range(delta + 1), n_max=4)
            assert res.admits(delta, 3), (delta, res.frontier)


@pytest.mark.criterion(3, "delay program runtime equals the censored Discrete Laplace law")
def test_c03_delay_law():
    with _Clock(10):
        prog = P.timing_private_delay(a=1, b=2, shift=4, bound=8)
        ref = censored_dl_dist(DiscreteLaplaceParams(4, 1, 2), CensorSpec(12, 0, 16 + 7 * 8))
        for x in ((), (0,), (5, 1)):
            j = enumerate_exact(prog, x)
            assert j.residual == 0
            assert j.runtime_marginal() == ref


@pytest.mark.criterion(4, "exact delay delta stays under 2 (a/b)^(mu - t_in) on the grid")
def test_c04_delay_certification_grid():
    with _Clock(30):
        count = 0
        for b in (2, 3):
            for t_in in (1, 2, 3):
                for mu in range(2 * t_in, 13):
                    for upper in range(2 * mu, 3 * mu + 1):
                        cert = certify_delay(DiscreteLaplaceParams(mu, 1, b),
                                             CensorSpec(upper), t_in)
                        bound = 2 * Fraction(1, b) ** (mu - t_in)
                        assert max(cert.per_shift) <= bound
                        count += 1
        assert count > 300


@pytest.mark.criterion(5, "Discrete Laplace runtime, output law and (Delta -> eps)-DP")
def test_c05_discrete_laplace():
    with _Clock(30):
        prog = P.discrete_laplace(1, 2)
        cap = 30
        lim = Limits(max_rand_branches=cap + 2)  # two coins precede the geometric loop
        for x in range(6):
            j = enumerate_exact(prog, (x,), limits=lim)
            for (y,), d in j.by_output().items():
                law = d.normalized()
                if y > 0:
                    assert law.as_dict() == {15 + 5 * abs(x - y): 1}
                else:
                    # x - N clamped at 0: the cheapest path is the one with N = x
                    assert law.lo() == 15 + 5 * x
                assert abs(x - y) <= cap
            # (ii) output marginal against the censored law, within the pruned mass
            assert j.residual <= Fraction(1, 2) ** cap
            params = DiscreteLaplaceParams(x, 1, 2)
            wide = CensorSpec(10 ** 6)
            seen = j.output_marginal()
            for (y,), p in seen.items():
                assert abs(p - censored_dl_pmf(y, params, wide)) <= j.residual
            missing = 1 - sum(seen.values())
            assert missing == j.residual
        wp = P.discrete_laplace(1, 2, word_bits=5)
        for delta in (1, 2):
            res = check_output_dp(wp, ABS, delta, range(32), PrivacyBudget(2 ** delta))
            assert res.passed and res.e_eps_pure == 2 ** delta


@pytest.mark.criterion(6, "end-to-end private sum: eps1-DP output and (eps2, delta) timing")
def test_c06_private_sum_end_to_end():
    with _Clock(300):
        Delta, a, b = 2, 1, 2
        t_in = 3 + 5 * Delta
        mu = 20
        e1 = Fraction(b, a) ** Delta
        cert = certify_delay(DiscreteLaplaceParams(mu, a, b), CensorSpec(2 * mu), t_in)
        assert cert.budget == PrivacyBudget(Fraction(2) ** 13, Fraction(1, 64))
        noisy = P.chain(P.sum_program(6), P.discrete_laplace(a, b, 6))
        full = P.chain(noisy, P.timing_private_delay(a, b, mu, mu, 6))
        lim = Limits(max_rand_branches=200)
        kw = dict(n_max=3, limits=lim)
        out = check_output_dp(full, ID, 1, range(Delta + 1), PrivacyBudget(e1), **kw)
        assert out.passed, out
        oc = check_oc_timing_privacy(full, ID, 1, range(Delta + 1), cert.budget, **kw)
        assert oc.passed, oc


@pytest.mark.criterion(7, "relationship implications hold on >= 200 synthetic programs")
def test_c07_relationship_implications(programs):
    assert len(programs) >= 200
    hits = dict.fromkeys((f.__name__ for f in implications.IMPLICATIONS), 0)
    bad = []
    for prog in programs:
        for f in implications.IMPLICATIONS:
            v, applied = f(prog)
            hits[f.__name__] += applied
            bad += [(prog.name,) + item for item in v]
    assert bad == []
    assert all(n >= 20 for n in hits.values()), hits


@pytest.mark.criterion(8, "sum has at most linear runtime (n <= 6)")
def test_c08_linear_runtime():
    assert linear_runtime_holds(P.sum_program(), 6, (0, 1, 2), 3) is None


@pytest.mark.criterion(9, "truncation after the leaky identity breaks OC timing privacy")
def test_c09_post_processing_counterexample():
    leaky = P.leaky_identity()
    kw = dict(n_min=1, n_max=1)
    base = check_oc_timing_privacy(leaky, H, 1, range(3), PrivacyBudget(1), **kw)
    assert base.passed and base.e_eps_pure == 1
    chained = P.chain(leaky, P.truncate_program())
    res = check_oc_timing_privacy(chained, H, 1, range(3), PrivacyBudget(10 ** 9), **kw)
    assert res.e_eps_pure == INF
    assert not res.passed


@pytest.mark.criterion(10, "10^5 seeded samples match the exact law within TV 0.02")
def test_c10_monte_carlo():
    with _Clock(60):
        for prog in (P.randomized_response(), P.timing_private_delay(1, 2, 4, 8)):
            assert monte_carlo_tvd(prog, (0,), 100_000, seed=11) <= Fraction(1, 50)


@pytest.mark.criterion(11, "timing simulator meets its three conditions on the corpus")
def test_c11_simulator(programs):
    bad = []
    for prog in programs:
        bad += implications.simulator_ok(prog)[0]
    assert bad == []


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
