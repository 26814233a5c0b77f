"""Relationship checks between the privacy and stability notions, one program at a time.

Every function returns a list of violations (empty when the implication holds)
and whether its premise applied, so callers can also make sure the corpus
exercises each implication.
"""

from fractions import Fraction

from timingdp.coupling import INF
from timingdp.metrics import MetricKind
from timingdp.privacy import (PrivacyBudget, build_timing_simulator, check_joint_privacy,
                              check_oc_timing_privacy, check_output_dp, oc_pair_budget_delta,
                              simulator_conditions)
from timingdp.stability import (check_joint_stability, check_oc_timing_stability,
                                check_output_stability, check_timing_stability, is_constant_time,
                                is_output_deterministic)
from timingdp.vm import enumerate_exact

H = MetricKind.HAMMING
BITS = (0, 1)
KW = dict(domain=BITS, n_min=1, n_max=1)
E_GRID = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(4))


def joint_to_oc(prog):
    """Pure e^eps joint privacy gives e^(2 eps) OC timing privacy."""
    e = check_joint_privacy(prog, H, 1, BITS, PrivacyBudget(1, 1), n_min=1, n_max=1).e_eps_pure
    if e == INF:
        return [], False
    res = check_oc_timing_privacy(prog, H, 1, BITS, PrivacyBudget(e * e), n_min=1, n_max=1)
    return ([] if res.passed else [("joint->oc", e, res.witness)]), True


def dp_plus_timing_to_joint(prog):
    bad = []
    for e1 in E_GRID:
        d1 = check_output_dp(prog, H, 1, BITS, PrivacyBudget(e1, 1), n_min=1, n_max=1).delta_needed
        for e2 in E_GRID:
            d2 = check_oc_timing_privacy(prog, H, 1, BITS, PrivacyBudget(e2, 1),
                                         n_min=1, n_max=1).delta_needed
            target = PrivacyBudget(e1 * e2, min(Fraction(1), d1 + d2))
            res = check_joint_privacy(prog, H, 1, BITS, target, n_min=1, n_max=1)
            if not res.passed:
                bad.append(("dp+timing->joint", e1, d1, e2, d2, res.delta_needed))
    return bad, True


def joint_stable_to_parts(prog):
    js = check_joint_stability(prog, H, 1, MetricKind.ABS_DIFF, **KW)
    t = check_timing_stability(prog, H, 1, **KW).t_out
    d = check_output_stability(prog, H, 1, MetricKind.ABS_DIFF, **KW).t_out
    bad = [("joint->parts", dj, tj, d, t) for dj, tj in js.frontier if t > tj or d > dj]
    return bad, bool(js.frontier)


def constant_time_to_oc(prog):
    if not is_constant_time(prog, [(0,), (1,)]):
        return [], False
    t = check_oc_timing_stability(prog, H, 1, **KW).t_out
    return ([] if t == 0 else [("const->oc0", t)]), True


def deterministic_to_oc(prog):
    if not is_output_deterministic(prog, [(0,), (1,)]):
        return [], False
    t = check_timing_stability(prog, H, 1, **KW).t_out
    oc = check_oc_timing_stability(prog, H, 1, **KW).t_out
    return ([] if oc <= t else [("det->oc", oc, t)]), True


def simulator_ok(prog, e_eps=Fraction(2)):
    bad = []
    for x, x2 in (((0,), (1,)), ((1,), (0,)), ((0,), (0,))):
        j, j2 = enumerate_exact(prog, x), enumerate_exact(prog, x2)
        sim = build_timing_simulator(j, j2)
        budget = PrivacyBudget(e_eps, oc_pair_budget_delta(j, j2, e_eps))
        conds = simulator_conditions(sim, j, j2, budget, probe=((99,), ()))
        if not all(conds):
            bad.append(("simulator", x, x2, conds))
    return bad, True


IMPLICATIONS = (joint_to_oc, dp_plus_timing_to_joint, joint_stable_to_parts, constant_time_to_oc,
          deterministic_to_oc)
