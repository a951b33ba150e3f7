import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbwk.instance import BanditInstance, RewardKind, RewardModel, gen_iid_uniform
from cbwk.offline import build_cost_matrix, cbwk_greedy
from cbwk.online import (
    SKIP_NOT_IN_PLAN,
    AlphaUcb,
    DualWeights,
    FixedBudgetPolicy,
    GreedyUcbPolicy,
    LpUcbPolicy,
    RadUcb,
    UcbState,
    canonical_policy_name,
    epsilon_for,
    fixed_budget_round,
    greedy_ucb_round,
    init_round,
    lp_ucb_round,
    mw_update,
    normalize_weights,
    rad,
    ucb_values,
)
from cbwk.sim import run_episode


def _state(means, pulls, t):
    return UcbState(pulls=list(pulls), sums=[m * k for m, k in zip(means, pulls)], round=t)


# -- confidence radius and UCB ---------------------------------------------

def test_rad_values():
    assert rad(0.0, 1, 3.0) == 3.0
    assert rad(1.0, 4, 4.0) == 2.0
    assert rad(0.25, 4, 4.0) == pytest.approx(math.sqrt(0.25 * 4 / 4) + 4 / 4)


@given(st.floats(0, 1), st.floats(0.01, 50), st.integers(1, 10_000))
def test_rad_decreasing_in_pulls(x, c, n):
    assert rad(x, n + 1, c) < rad(x, n, c)


def test_ucb_clamps_and_formulas():
    s = _state([1.0, 0.25, 0.5], [3, 4, 100], t=10)
    u = ucb_values(s, AlphaUcb(5))
    assert u[0] == 1.0
    assert u[2] == pytest.approx(0.5 + math.sqrt(5 * math.log(10) / 100))
    r = ucb_values(s, RadUcb(4.0))
    assert r[1] == 1.0  # 0.25 + 1.5 clamped
    assert all(0 <= v <= 1 for v in u + r)


def test_ucb_converges_to_mean():
    gaps = [ucb_values(_state([0.3], [k], 100), AlphaUcb(5))[0] - 0.3 for k in (10**2, 10**4, 10**8)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-3
    assert ucb_values(_state([0.3], [10**12], 100), RadUcb(2.0))[0] == pytest.approx(0.3, abs=1e-5)


def test_ucb_rejects_unpulled_arm():
    with pytest.raises(ValueError):
        ucb_values(_state([0.5, 0.5], [1, 0], 2), AlphaUcb())
    assert ucb_values(_state([0.5, 0.5], [1, 0], 2), AlphaUcb(), allow_unpulled=True)[1] == 0.0


def test_rad_ucb_default_constant():
    assert RadUcb.default(4, 100).c_rad == pytest.approx(math.log(4 * 5 * 100))


# -- multiplicative weights ---------------------------------------------------

def test_normalize_and_scale_invariance():
    w = DualWeights.ones(3, 0.1)
    assert normalize_weights(w) == pytest.approx([1 / 3] * 3)
    w = mw_update(w, [1.0, 0.0, 0.3])
    assert normalize_weights(w).sum() == pytest.approx(1.0, abs=1e-12)
    assert normalize_weights(w.scaled(1e6)) == pytest.approx(normalize_weights(w))


def test_mw_update_arithmetic():
    w = DualWeights.ones(2, 0.5)
    assert np.allclose(mw_update(w, [0.0, 0.0]).v, w.v)
    assert mw_update(w, [1.0, 0.0]).v == pytest.approx([1.5, 1.0])
    a, b = [0.2, 1.0], [0.7, 0.1]
    ab = mw_update(mw_update(w, a), b)
    ba = mw_update(mw_update(w, b), a)
    assert ab.v == pytest.approx(ba.v)
    assert ab.v == pytest.approx([1.5 ** 0.9, 1.5 ** 1.1])


def test_weights_do_not_overflow():
    w = DualWeights.ones(2, 0.5)
    for _ in range(5000):
        w = mw_update(w, [1.0, 0.5])
    y = normalize_weights(w)
    assert np.all(np.isfinite(y)) and y.sum() == pytest.approx(1.0)


def test_epsilon_for():
    assert epsilon_for(1000, 5000, 9) == pytest.approx(math.sqrt(math.log(10) / 1000))
    assert epsilon_for(1, 1, 1) == pytest.approx(math.sqrt(math.log(2)))
    assert epsilon_for(1, 1, 2) == 0.999  # sqrt(ln 3) > 1
    assert epsilon_for(0.2, 10, 5) == 0.999
    assert epsilon_for(0, 10, 5) == 0.999
    assert epsilon_for(100, 1000, 5) > epsilon_for(200, 1000, 5) > 0


# -- round decisions ---------------------------------------------------------

def test_init_round():
    costs = [0.3, 0.4, 0.5]
    assert init_round(costs, 1.2).superarm == (0, 1, 2)
    assert init_round(costs, 0.0).superarm == ()
    assert init_round(costs, 0.75).superarm == (0, 1)
    # affordability is sequential: arm 1 does not fit but arm 2 later might
    assert init_round([0.3, 0.9, 0.2], 0.6).superarm == (0, 2)


def test_greedy_round_examples():
    assert greedy_ucb_round([0.9, 0.1], [0.5, 0.5], 0.5, t=10, horizon=10).superarm == (0,)
    assert greedy_ucb_round([0.9, 0.1], [0.5, 0.5], 0.4, t=2, horizon=10).superarm == ()
    costs = [0.2, 0.3, 0.4]
    assert greedy_ucb_round([0.1, 0.9, 0.4], costs, 5 * sum(costs), t=6, horizon=10).superarm == (0, 1, 2)
    # the plan must agree with the offline greedy on the same inputs
    plan = cbwk_greedy([0.9, 0.1], [0.5, 0.5], 0.5, 1)
    assert plan.counts == (1, 0)


def test_lp_round_golden():
    m = build_cost_matrix([0.5, 0.5], 2.0, 4)
    w = DualWeights.ones(3, 0.3)
    decision, w2 = lp_ucb_round([0.9, 0.8], w, m, [0.5, 0.5], 0.5, t=4, horizon=4)
    assert decision.superarm == (0,)
    assert decision.skipped == {1: SKIP_NOT_IN_PLAN}
    assert w2.v == pytest.approx((1.3 ** m.entries[:, 0]))


def test_lp_round_index_ties_and_ample_budget():
    costs = [0.4, 0.4, 0.4]
    m = build_cost_matrix(costs, 10.0, 10)
    decision, _ = lp_ucb_round([0.5] * 3, DualWeights.ones(4, 0.1), m, costs, 10.0, 2, 10)
    assert decision.superarm == (0, 1, 2)


def test_lp_round_reserves_for_better_arms():
    # arm 0 is better and needs 0.5 per round for 2 rounds: arm 1 must wait
    costs = [0.5, 0.5]
    m = build_cost_matrix(costs, 2.0, 4)
    decision, _ = lp_ucb_round([0.9, 0.2], DualWeights.ones(3, 0.1), m, costs, 1.0, t=3, horizon=4)
    assert decision.superarm == (0,)


@given(st.integers(0, 2**31), st.floats(1e-3, 1e3))
@settings(max_examples=100)
def test_lp_ranking_invariant_under_weight_scaling(seed, factor):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    costs = list(rng.uniform(0.05, 1, n))
    ucb = list(rng.uniform(0, 1, n))
    T = int(rng.integers(2, 30))
    B = float(rng.uniform(0.1, T * sum(costs)))
    m = build_cost_matrix(costs, B, T)
    w = DualWeights(tuple(rng.uniform(0, 5, n + 1)), 0.2)
    t = int(rng.integers(2, T + 1))
    d1, _ = lp_ucb_round(ucb, w, m, costs, B / 2, t, T)
    d2, _ = lp_ucb_round(ucb, w.scaled(factor), m, costs, B / 2, t, T)
    assert d1 == d2


def test_fixed_budget_round():
    costs = [0.3, 0.2, 0.6]
    assert fixed_budget_round([0.9, 0.9, 0.9], costs, 0.1, 100).superarm == ()
    assert fixed_budget_round([0.9, 0.5, 0.2], costs, sum(costs), 100).superarm == (0, 1, 2)
    # capped by what is left overall
    assert fixed_budget_round([0.9, 0.5, 0.2], costs, sum(costs), 0.5).superarm == (0, 1)


# -- wrapped policies over episodes ------------------------------------------

def test_fixed_budget_never_pulls_expensive_arm():
    inst = BanditInstance(mu=[0.99, 0.01], cost=[0.11, 0.01], budget=1.0, horizon=10)
    trace = run_episode(inst, FixedBudgetPolicy(per_round_budget=0.1), seed=0)
    assert all(0 not in r.superarm for r in trace.rounds[1:])


def test_degenerate_greedy_matches_offline_greedy():
    # zero radius + deterministic rewards: each round's superarm is exactly
    # the set of arms the offline greedy plans at least once and can afford
    for seed in range(30):
        inst = gen_iid_uniform(6, 25, 25 * 0.4 * 6 * (seed % 3 + 1) / 3, seed)
        trace = run_episode(inst, GreedyUcbPolicy(AlphaUcb(0.0)), RewardModel(RewardKind.DEGENERATE), seed)
        remaining = inst.budget - sum(inst.cost[i] for i in trace.rounds[0].superarm)
        for rec in trace.rounds[1:]:
            plan = cbwk_greedy(inst.mu, inst.cost, remaining, inst.horizon - rec.t + 1)
            expect, left = [], remaining
            for i, k in enumerate(plan.counts):
                if k >= 1 and inst.cost[i] <= left + 1e-9:
                    expect.append(i)
                    left -= inst.cost[i]
            assert rec.superarm == tuple(expect)
            remaining -= rec.spend


def test_empirical_means_match_trace():
    inst = gen_iid_uniform(5, 200, 150.0, seed=4)
    for policy in (GreedyUcbPolicy(), LpUcbPolicy(), FixedBudgetPolicy()):
        trace = run_episode(inst, policy, seed=9)
        sums, counts = [0.0] * 5, [0] * 5
        for rec in trace.rounds:
            for i, r in zip(rec.superarm, rec.rewards):
                sums[i] += r
                counts[i] += 1
        assert policy.state.pulls == counts == list(trace.pulls)
        for i in range(5):
            if counts[i]:
                assert policy.state.emp_mean[i] == pytest.approx(sums[i] / counts[i], abs=1e-12)
        assert all(k <= inst.horizon for k in policy.state.pulls)


def test_dual_weights_positive_and_monotone_over_run():
    inst = gen_iid_uniform(6, 300, 200.0, seed=2)
    policy = LpUcbPolicy()
    policy.reset(inst.cost, inst.budget, inst.horizon)
    rewards = RewardModel().table(inst.mu, inst.horizon, np.random.default_rng(0))
    prev = np.asarray(policy.weights.log_v)
    spent = 0.0
    for t in range(1, inst.horizon + 1):
        d = policy.select(t, inst.budget - spent)
        for i in d.superarm:
            policy.observe(i, rewards[t - 1, i])
            spent += inst.cost[i]
        cur = np.asarray(policy.weights.log_v)
        assert np.all(cur >= prev) and np.all(policy.weights.v > 0)
        prev = cur


def test_policy_determinism():
    inst = gen_iid_uniform(5, 100, 60.0, seed=1)
    for make in (GreedyUcbPolicy, LpUcbPolicy, FixedBudgetPolicy):
        a = run_episode(inst, make(), seed=3)
        b = run_episode(inst, make(), seed=3)
        assert [r.superarm for r in a.rounds] == [r.superarm for r in b.rounds]


def test_policy_aliases():
    assert canonical_policy_name("greedy-ucb") == "CBwK-Greedy-UCB"
    assert canonical_policy_name("LP-UCB") == "CBwK-LP-UCB"
    with pytest.raises(ValueError):
        canonical_policy_name("thompson")
