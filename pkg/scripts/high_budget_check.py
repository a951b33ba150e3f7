#!/usr/bin/env python3
"""With B >= T * sum(c) every arm is pulled every round and regret is exactly 0."""
from cbwk.instance import BanditInstance, gen_iid_uniform
from cbwk.online import GREEDY_UCB, LP_UCB, make_policy
from cbwk.sim import pseudo_regret, run_episode

T = 200
for seed in range(10):
    base = gen_iid_uniform(10, T, 0.0, seed)
    inst = BanditInstance(base.mu, base.cost, T * sum(base.cost), T)
    regrets = [pseudo_regret(run_episode(inst, make_policy(p), seed=seed), inst) for p in (GREEDY_UCB, LP_UCB)]
    print(f"seed {seed}: greedy-ucb {regrets[0]:.2e}  lp-ucb {regrets[1]:.2e}")
