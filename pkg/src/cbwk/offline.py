"""Offline allocation with known means.

Solvers for the integer program: maximize sum_i N_i * value_i subject to
sum_i N_i * c_i <= B and 0 <= N_i <= T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# slack added before flooring budget/cost so representation error never
# makes an affordable pull unaffordable
FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class Allocation:
    counts: tuple[int, ...]
    total_value: float
    total_cost: float

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "total_value": self.total_value, "total_cost": self.total_cost}


@dataclass(frozen=True)
class FractionalSolution:
    zeta: tuple[float, ...]
    opt_value: float


@dataclass(frozen=True)
class CostMatrix:
    """The (n+1) x n resource-consumption matrix of the single-pull reduction.

    Rows 0..n-1 are the per-arm "pulls left" resources, row n is the budget.
    """

    entries: np.ndarray
    b_prime: float

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def column(self, i: int) -> np.ndarray:
        return self.entries[:, i]


def _allocation(counts: Sequence[int], values: Sequence[float], costs: Sequence[float]) -> Allocation:
    counts = tuple(int(k) for k in counts)
    return Allocation(
        counts=counts,
        total_value=math.fsum(k * v for k, v in zip(counts, values)),
        total_cost=math.fsum(k * c for k, c in zip(counts, costs)),
    )


def bangperbuck_order(values: Sequence[float], costs: Sequence[float]) -> list[int]:
    """Arm indices by value/cost, non-increasing; ties go to the lower index."""
    if len(values) != len(costs):
        raise ValueError("values and costs differ in length")
    # stable sort keeps ascending index among equal ratios
    return sorted(range(len(values)), key=lambda i: -(values[i] / costs[i]))


def max_affordable(budget: float, cost: float, cap: int) -> int:
    if budget <= 0.0:
        return 0
    return max(0, min(cap, math.floor((budget + FLOOR_EPS) / cost)))


def cbwk_greedy(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int) -> Allocation:
    """Give each arm, in bangperbuck order, as many of the T rounds as the
    remaining budget allows."""
    counts = [0] * len(values)
    remaining = budget
    for i in bangperbuck_order(values, costs):
        k = max_affordable(remaining, costs[i], horizon)
        counts[i] = k
        remaining -= k * costs[i]
    return _allocation(counts, values, costs)


def best_single_arm(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int) -> Allocation:
    best = [0] * len(values)
    best_value = -1.0
    for i in range(len(values)):
        k = max_affordable(budget, costs[i], horizon)
        if k * values[i] > best_value:
            best_value = k * values[i]
            best = [0] * len(values)
            best[i] = k
    return _allocation(best, values, costs)


def cbwk_greedy_2approx(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int) -> Allocation:
    """Better of the greedy allocation and the best single-arm allocation.

    The single-arm fallback caps the loss from the greedy's one truncated
    arm, which gives the factor-2 guarantee.
    """
    greedy = cbwk_greedy(values, costs, budget, horizon)
    single = best_single_arm(values, costs, budget, horizon)
    return single if single.total_value > greedy.total_value else greedy


def lp_opt_fractional(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int) -> FractionalSolution:
    """Optimum of the LP relaxation.

    One packing row plus box constraints 0 <= zeta_i <= T, so the capped
    fractional knapsack greedy is exact.
    """
    zeta = [0.0] * len(values)
    remaining = float(budget)
    for i in bangperbuck_order(values, costs):
        if remaining <= 0.0:
            break
        z = min(float(horizon), remaining / costs[i])
        zeta[i] = z
        remaining -= z * costs[i]
    return FractionalSolution(zeta=tuple(zeta), opt_value=math.fsum(z * v for z, v in zip(zeta, values)))


def lp_dual(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int) -> tuple[np.ndarray, float]:
    """Dual certificate ``(eta, B' * sum(eta))`` for the reduced LP.

    The budget row is priced at the bangperbuck of the marginal arm (first
    arm in order not pulled all T rounds); each arm row carries that arm's
    surplus over the budget price. Requires ``budget > 0``.
    """
    n = len(values)
    primal = lp_opt_fractional(values, costs, budget, horizon)
    price = 0.0
    for i in bangperbuck_order(values, costs):
        if primal.zeta[i] < horizon:
            price = values[i] / costs[i]
            break
    surplus = [max(0.0, values[i] - price * costs[i]) for i in range(n)]
    b_prime = min(budget, horizon)
    eta = np.empty(n + 1)
    eta[:n] = np.asarray(surplus) * horizon / b_prime
    eta[n] = price * budget / b_prime
    return eta, b_prime * float(eta.sum())


def dp_exact(values: Sequence[float], costs: Sequence[float], budget: float, horizon: int, scale: int) -> Allocation:
    """Exact optimum by bounded-knapsack DP over integer budget units.

    Costs are multiplied by ``scale`` and must then be integral. Among optimal
    allocations the lexicographically smallest count vector is returned.
    Meant as a test oracle: O(n * T * scale * B).
    """
    n = len(values)
    weights = []
    for c in costs:
        w = round(c * scale)
        if abs(c * scale - w) > 1e-9 * max(1.0, scale):
            raise ValueError(f"cost {c} is not integral at scale {scale}")
        weights.append(w)
    cap = max(0, math.floor(budget * scale + 1e-9))

    # best[i][b]: best value from arms i..n-1 with budget at most b
    best = np.zeros((n + 1, cap + 1))
    for i in range(n - 1, -1, -1):
        nxt = best[i + 1]
        row = nxt.copy()
        for k in range(1, horizon + 1):
            used = k * weights[i]
            if used > cap:
                break
            cand = np.full(cap + 1, -np.inf)
            cand[used:] = nxt[: cap + 1 - used] + k * values[i]
            np.maximum(row, cand, out=row)
        best[i] = row

    counts = []
    b = cap
    tol = 1e-12 * max(1.0, best[0][cap])
    for i in range(n):
        target = best[i][b]
        for k in range(0, horizon + 1):
            used = k * weights[i]
            if used > b:
                raise AssertionError("DP reconstruction failed")
            if k * values[i] + best[i + 1][b - used] >= target - tol:
                counts.append(k)
                b -= used
                break
    return _allocation(counts, values, costs)


def build_cost_matrix(costs: Sequence[float], budget: float, horizon: int) -> CostMatrix:
    if budget <= 0:
        raise ValueError("cost matrix needs a positive budget")
    n = len(costs)
    b_prime = min(float(budget), float(horizon))
    m = np.zeros((n + 1, n))
    m[np.arange(n), np.arange(n)] = b_prime / horizon
    m[n, :] = np.asarray(costs, dtype=float) * b_prime / budget
    return CostMatrix(entries=m, b_prime=b_prime)
