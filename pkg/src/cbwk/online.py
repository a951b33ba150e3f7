"""Online policies for budgeted combinatorial bandits.

Round functions are pure given their inputs; the ``*Policy`` classes wrap
them with per-episode mutable state for :func:`cbwk.sim.run_episode`.
Arm indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .offline import FLOOR_EPS, CostMatrix, build_cost_matrix, cbwk_greedy, max_affordable

GREEDY_UCB = "CBwK-Greedy-UCB"
LP_UCB = "CBwK-LP-UCB"
FIXED_BUDGET = "FixedBudget"
POLICY_NAMES = (GREEDY_UCB, LP_UCB, FIXED_BUDGET)

EPSILON_MAX = 0.999


# --------------------------------------------------------------------------
# UCB estimation

@dataclass
class UcbState:
    """Pull counts and reward sums per arm; ``round`` is the current round t."""

    pulls: list[int]
    sums: list[float]
    round: int = 0

    @classmethod
    def empty(cls, n: int) -> "UcbState":
        return cls(pulls=[0] * n, sums=[0.0] * n)

    @property
    def n(self) -> int:
        return len(self.pulls)

    @property
    def emp_mean(self) -> list[float]:
        return [s / k if k else 0.0 for s, k in zip(self.sums, self.pulls)]

    @property
    def total_plays(self) -> int:
        return sum(self.pulls)

    def observe(self, arm: int, reward: float) -> None:
        self.pulls[arm] += 1
        self.sums[arm] += reward


def rad(x: float, n_pulls: int, c_rad: float) -> float:
    """Confidence radius sqrt(x * C_rad / N) + C_rad / N."""
    return math.sqrt(x * c_rad / n_pulls) + c_rad / n_pulls


@dataclass(frozen=True)
class AlphaUcb:
    """u_i = mean_i + sqrt(alpha * ln t / N_i)."""

    alpha: float = 5.0

    def radius(self, mean: float, n_pulls: int, t: int) -> float:
        return math.sqrt(self.alpha * math.log(max(t, 1)) / n_pulls)


@dataclass(frozen=True)
class RadUcb:
    """u_i = mean_i + rad(mean_i, N_i) with a fixed C_rad."""

    c_rad: float

    @classmethod
    def default(cls, n: int, horizon: int, kappa: float = 1.0) -> "RadUcb":
        # C_rad = kappa * ln(n * d * T), d = n + 1
        return cls(c_rad=kappa * math.log(n * (n + 1) * horizon))

    def radius(self, mean: float, n_pulls: int, t: int) -> float:
        return rad(mean, n_pulls, self.c_rad)


UcbVariant = Union[AlphaUcb, RadUcb]


def ucb_values(state: UcbState, variant: UcbVariant, allow_unpulled: bool = False) -> list[float]:
    """UCB estimates clamped to [0, 1].

    Arms never pulled raise ``ValueError`` unless ``allow_unpulled``, in
    which case they score 0. The policies only need that for arms that
    were unaffordable at initialization and so stay unaffordable.
    """
    out = []
    for s, k in zip(state.sums, state.pulls):
        if k == 0:
            if not allow_unpulled:
                raise ValueError("UCB requested for an arm that was never pulled")
            out.append(0.0)
            continue
        mean = s / k
        out.append(min(1.0, max(0.0, mean + variant.radius(mean, k, state.round))))
    return out


# --------------------------------------------------------------------------
# multiplicative weights over resources

@dataclass(frozen=True)
class DualWeights:
    """Estimated unit costs of the d = n + 1 resources.

    Stored as logarithms so long runs cannot overflow; ``v`` exponentiates.
    """

    log_v: tuple[float, ...]
    epsilon: float

    @classmethod
    def ones(cls, d: int, epsilon: float) -> "DualWeights":
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
        return cls(log_v=(0.0,) * d, epsilon=epsilon)

    @property
    def v(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_v))

    def scaled(self, factor: float) -> "DualWeights":
        shift = math.log(factor)
        return DualWeights(tuple(x + shift for x in self.log_v), self.epsilon)


def normalize_weights(w: DualWeights) -> np.ndarray:
    """y_j = v_j / sum(v), computed stably from the log weights."""
    log_v = np.asarray(w.log_v)
    z = np.exp(log_v - log_v.max())
    return z / z.sum()


def mw_update(w: DualWeights, column: Sequence[float]) -> DualWeights:
    """v_j <- v_j * (1 + eps) ** M_ji for the pulled arm's cost column."""
    step = math.log1p(w.epsilon)
    return DualWeights(tuple(x + step * m for x, m in zip(w.log_v, column)), w.epsilon)


def epsilon_for(budget: float, horizon: int, n: int) -> float:
    """sqrt(ln(n+1) / min(B, T)), clamped into (0, 0.999]."""
    b_prime = min(budget, horizon)
    if b_prime <= 0:
        return EPSILON_MAX
    return min(EPSILON_MAX, math.sqrt(math.log(n + 1) / b_prime))


# --------------------------------------------------------------------------
# per-round decisions

SKIP_UNAFFORDABLE = "unaffordable"
SKIP_NOT_IN_PLAN = "not-in-plan"


@dataclass(frozen=True)
class PolicyDecision:
    """Arms pulled this round, in pull order, plus why the others were skipped."""

    superarm: tuple[int, ...]
    skipped: dict[int, str] = field(default_factory=dict)


def init_round(costs: Sequence[float], budget: float) -> PolicyDecision:
    """Round 1: pull every arm that is still affordable, in index order."""
    pulled, skipped = [], {}
    remaining = budget
    for i, c in enumerate(costs):
        if c <= remaining + FLOOR_EPS:
            pulled.append(i)
            remaining -= c
        else:
            skipped[i] = SKIP_UNAFFORDABLE
    return PolicyDecision(tuple(pulled), skipped)


def _take_planned(plan: Sequence[int], costs: Sequence[float], budget: float) -> PolicyDecision:
    pulled, skipped = [], {}
    remaining = budget
    for i, k in enumerate(plan):
        if k < 1:
            skipped[i] = SKIP_NOT_IN_PLAN
        elif costs[i] > remaining + FLOOR_EPS:
            skipped[i] = SKIP_UNAFFORDABLE
        else:
            pulled.append(i)
            remaining -= costs[i]
    return PolicyDecision(tuple(pulled), skipped)


def greedy_ucb_round(
    ucb: Sequence[float], costs: Sequence[float], budget_remaining: float, t: int, horizon: int
) -> PolicyDecision:
    """Plan the remaining rounds with the offline greedy on UCB values and
    pull every arm the plan uses at least once, while affordable.

    The plan covers the T - t + 1 rounds still to play, current one included.
    """
    plan = cbwk_greedy(ucb, costs, budget_remaining, horizon - t + 1)
    return _take_planned(plan.counts, costs, budget_remaining)


def lp_ucb_round(
    ucb: Sequence[float],
    weights: DualWeights,
    matrix: CostMatrix,
    costs: Sequence[float],
    budget_remaining: float,
    t: int,
    horizon: int,
) -> tuple[PolicyDecision, DualWeights]:
    """One round of the primal-dual policy.

    Arms are ranked by u_i / (y . C_i). Walking that ranking, a virtual
    budget reserves what each pulled arm would spend over the remaining
    rounds; an arm is pulled only if the reservation left by better arms
    still covers at least one of its pulls. Every pull applies the
    multiplicative-weights update with that arm's cost column.
    """
    n = len(costs)
    remaining_rounds = horizon - t + 1
    y = normalize_weights(weights)
    est_cost = y @ matrix.entries
    bpb = [ucb[i] / est_cost[i] for i in range(n)]
    order = sorted(range(n), key=lambda i: -bpb[i])

    pulled, skipped = [], {}
    virtual = budget_remaining
    actual = budget_remaining
    for j in order:
        planned = max_affordable(virtual, costs[j], remaining_rounds)
        if planned < 1:
            skipped[j] = SKIP_NOT_IN_PLAN
            continue
        if costs[j] > actual + FLOOR_EPS:
            skipped[j] = SKIP_UNAFFORDABLE
            continue
        pulled.append(j)
        actual -= costs[j]
        virtual -= costs[j] * planned
        weights = mw_update(weights, matrix.entries[:, j])
    return PolicyDecision(tuple(pulled), skipped), weights


def fixed_budget_round(
    ucb: Sequence[float], costs: Sequence[float], per_round_budget: float, budget_remaining: float
) -> PolicyDecision:
    """Single-round knapsack on UCB values within a fixed per-round budget."""
    cap = min(per_round_budget, budget_remaining)
    plan = cbwk_greedy(ucb, costs, cap, 1)
    return _take_planned(plan.counts, costs, cap)


# --------------------------------------------------------------------------
# stateful wrappers used by the simulator

class Policy:
    """Per-episode policy state. ``reset`` must be called before round 1."""

    name = "policy"

    def __init__(self, ucb: UcbVariant | None = None):
        self.ucb = ucb if ucb is not None else AlphaUcb()

    def reset(self, costs: Sequence[float], budget: float, horizon: int) -> None:
        self.costs = list(costs)
        self.budget = budget
        self.horizon = horizon
        self.state = UcbState.empty(len(self.costs))

    def select(self, t: int, budget_remaining: float) -> PolicyDecision:
        self.state.round = t
        if t == 1:
            return init_round(self.costs, budget_remaining)
        if budget_remaining < min(self.costs) - FLOOR_EPS:
            return PolicyDecision((), {i: SKIP_UNAFFORDABLE for i in range(len(self.costs))})
        return self._select(t, budget_remaining)

    def _select(self, t: int, budget_remaining: float) -> PolicyDecision:
        raise NotImplementedError

    def observe(self, arm: int, reward: float) -> None:
        self.state.observe(arm, reward)

    def _ucb(self) -> list[float]:
        return ucb_values(self.state, self.ucb, allow_unpulled=True)


class GreedyUcbPolicy(Policy):
    name = GREEDY_UCB

    def _select(self, t, budget_remaining):
        return greedy_ucb_round(self._ucb(), self.costs, budget_remaining, t, self.horizon)


class LpUcbPolicy(Policy):
    name = LP_UCB

    def reset(self, costs, budget, horizon):
        super().reset(costs, budget, horizon)
        n = len(self.costs)
        self.matrix = build_cost_matrix(self.costs, budget, horizon) if budget > 0 else None
        self.weights = DualWeights.ones(n + 1, epsilon_for(budget, horizon, n))

    def _select(self, t, budget_remaining):
        decision, self.weights = lp_ucb_round(
            self._ucb(), self.weights, self.matrix, self.costs, budget_remaining, t, self.horizon
        )
        return decision


class FixedBudgetPolicy(Policy):
    """Spends at most ``per_round_budget`` each round (default B / T)."""

    name = FIXED_BUDGET

    def __init__(self, ucb: UcbVariant | None = None, per_round_budget: float | None = None):
        super().__init__(ucb)
        self.per_round_budget = per_round_budget

    def reset(self, costs, budget, horizon):
        super().reset(costs, budget, horizon)
        self.round_budget = self.per_round_budget if self.per_round_budget is not None else budget / horizon

    def _select(self, t, budget_remaining):
        return fixed_budget_round(self._ucb(), self.costs, self.round_budget, budget_remaining)


_ALIASES = {
    "greedy-ucb": GREEDY_UCB,
    "greedy": GREEDY_UCB,
    "lp-ucb": LP_UCB,
    "lp": LP_UCB,
    "fixed-budget": FIXED_BUDGET,
    "fixed": FIXED_BUDGET,
}


def canonical_policy_name(name: str) -> str:
    if name in POLICY_NAMES:
        return name
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}") from None


def make_policy(name: str, ucb: UcbVariant | None = None, per_round_budget: float | None = None) -> Policy:
    name = canonical_policy_name(name)
    if name == GREEDY_UCB:
        return GreedyUcbPolicy(ucb)
    if name == LP_UCB:
        return LpUcbPolicy(ucb)
    return FixedBudgetPolicy(ucb, per_round_budget)
