"""Episode loop with semi-bandit feedback, traces and pseudo-regret."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

from .instance import BanditInstance, RewardModel, make_rng, validate_instance
from .offline import FLOOR_EPS, lp_opt_fractional
from .online import Policy


@dataclass(frozen=True)
class RoundRecord:
    t: int
    superarm: tuple[int, ...]
    rewards: tuple[float, ...]
    expected_reward: float
    spend: float
    budget_remaining: float


@dataclass(frozen=True)
class EpisodeTrace:
    policy: str
    rounds: tuple[RoundRecord, ...]
    realized_reward: float
    expected_reward: float
    total_spend: float
    pulls: tuple[int, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "superarm", "spend", "budget_remaining", "expected_reward"])
        for r in self.rounds:
            w.writerow([
                r.t,
                ";".join(str(i) for i in sorted(r.superarm)),
                repr(r.spend),
                repr(r.budget_remaining),
                repr(r.expected_reward),
            ])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def run_episode(
    instance: BanditInstance, policy: Policy, reward_model: RewardModel | None = None, seed: int = 0
) -> EpisodeTrace:
    """Play ``policy`` for T rounds, feeding back each pulled arm's reward.

    Rewards come from a table drawn once from ``seed``, so two policies run
    with the same seed face identical reward realizations.
    """
    validate_instance(instance)
    reward_model = reward_model or RewardModel()
    mu, costs, T = instance.mu, instance.cost, instance.horizon
    table = reward_model.table(mu, T, make_rng(seed)).tolist()

    policy.reset(costs, instance.budget, T)
    spent = 0.0
    pulls = [0] * instance.n
    records = []
    realized_parts, expected_parts = [], []
    for t in range(1, T + 1):
        remaining = instance.budget - spent
        decision = policy.select(t, remaining)
        arms = decision.superarm
        if len(set(arms)) != len(arms):
            raise RuntimeError(f"{policy.name} pulled an arm twice in round {t}")
        row = table[t - 1]
        rewards = []
        round_spend = 0.0
        for i in arms:
            r = row[i]
            policy.observe(i, r)
            rewards.append(r)
            pulls[i] += 1
            round_spend += costs[i]
        spent += round_spend
        if spent > instance.budget + FLOOR_EPS:
            raise RuntimeError(f"{policy.name} overspent the budget in round {t}")
        expected = math.fsum(mu[i] for i in arms)
        realized_parts.append(math.fsum(rewards))
        expected_parts.append(expected)
        records.append(RoundRecord(t, tuple(arms), tuple(rewards), expected, round_spend, instance.budget - spent))

    return EpisodeTrace(
        policy=policy.name,
        rounds=tuple(records),
        realized_reward=math.fsum(realized_parts),
        expected_reward=math.fsum(expected_parts),
        total_spend=spent,
        pulls=tuple(pulls),
    )


def opt_lp(instance: BanditInstance) -> float:
    return lp_opt_fractional(instance.mu, instance.cost, instance.budget, instance.horizon).opt_value


def pseudo_regret(trace: EpisodeTrace, instance: BanditInstance) -> float:
    """OPT_LP on the true means minus the trace's expected reward.

    OPT_LP upper-bounds the best achievable expected reward, so this
    over-estimates regret against the optimal policy.
    """
    if len(trace.pulls) != instance.n or len(trace.rounds) != instance.horizon:
        raise ValueError("trace does not belong to this instance")
    return opt_lp(instance) - trace.expected_reward
