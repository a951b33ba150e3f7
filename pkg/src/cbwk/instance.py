"""Problem instances and the random generators behind the regret experiments.

All randomness flows through numpy's PCG64 seeded from a ``SeedSequence``,
so an instance is a pure function of its generator parameters and seed.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

COST_FLOOR = 1e-6


class InstanceError(ValueError):
    """Raised when a bandit instance violates one of its invariants."""


@dataclass(frozen=True)
class BanditInstance:
    """Arms with true mean rewards ``mu`` and known costs ``cost``.

    Arm indices are 0-based throughout the package.
    """

    mu: tuple[float, ...]
    cost: tuple[float, ...]
    budget: float
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        object.__setattr__(self, "cost", tuple(float(x) for x in self.cost))
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def n(self) -> int:
        return len(self.mu)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "T": self.horizon,
            "B": self.budget,
            "mu": list(self.mu),
            "cost": list(self.cost),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "BanditInstance":
        unknown = set(record) - {"n", "T", "B", "mu", "cost"}
        if unknown:
            raise InstanceError(f"unknown instance fields: {sorted(unknown)}")
        inst = cls(mu=record["mu"], cost=record["cost"], budget=record["B"], horizon=int(record["T"]))
        if "n" in record and int(record["n"]) != inst.n:
            raise InstanceError(f"n={record['n']} but {inst.n} means given")
        validate_instance(inst)
        return inst


def validate_instance(inst: BanditInstance) -> None:
    """Raise :class:`InstanceError` describing the first violated invariant."""
    if len(inst.mu) != len(inst.cost):
        raise InstanceError(f"length mismatch: {len(inst.mu)} means vs {len(inst.cost)} costs")
    if inst.n < 1:
        raise InstanceError("instance needs at least one arm")
    for i, m in enumerate(inst.mu):
        if not 0.0 <= m <= 1.0:
            raise InstanceError(f"mean of arm {i} out of [0,1]: {m}")
    for i, c in enumerate(inst.cost):
        if c == 0.0:
            raise InstanceError(f"zero cost for arm {i}")
        if not 0.0 < c <= 1.0:
            raise InstanceError(f"cost of arm {i} out of (0,1]: {c}")
    if not inst.budget >= 0.0:
        raise InstanceError(f"negative budget: {inst.budget}")
    if inst.horizon < 1:
        raise InstanceError(f"horizon must be >= 1, got {inst.horizon}")


def make_rng(*seed: int) -> np.random.Generator:
    """PCG64 generator keyed by one or more integers (e.g. base seed, replication)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(seed))))


def _floor_costs(c: np.ndarray) -> np.ndarray:
    return np.maximum(c, COST_FLOOR)


def gen_iid_uniform(n: int, horizon: int, budget: float, seed: int) -> BanditInstance:
    """Means and costs drawn independently from U[0,1]; costs floored at 1e-6."""
    if n < 1:
        raise InstanceError("n must be >= 1")
    rng = make_rng(seed)
    mu = rng.uniform(0.0, 1.0, size=n)
    cost = _floor_costs(rng.uniform(0.0, 1.0, size=n))
    inst = BanditInstance(mu=mu, cost=cost, budget=budget, horizon=horizon)
    validate_instance(inst)
    return inst


TIERS = ((0.9, 1.0), (0.6, 0.8), (0.2, 0.4), (0.0, 0.1))


def gen_tiered(seed: int, horizon: int = 100, budget: float = 157.5) -> BanditInstance:
    """Four arms: high, medium, low and very low rewarding.

    Arm k draws both its mean and its cost from ``TIERS[k]``.
    """
    rng = make_rng(seed)
    mu = np.empty(len(TIERS))
    cost = np.empty(len(TIERS))
    for k, (lo, hi) in enumerate(TIERS):
        mu[k] = rng.uniform(lo, hi)
        cost[k] = rng.uniform(lo, hi)
    inst = BanditInstance(mu=mu, cost=_floor_costs(cost), budget=budget, horizon=horizon)
    validate_instance(inst)
    return inst


class RewardKind(str, enum.Enum):
    BERNOULLI = "bernoulli"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RewardModel:
    """Per-arm reward distribution with mean ``mu[i]``."""

    kind: RewardKind = RewardKind.BERNOULLI

    def table(self, mu: Sequence[float], horizon: int, rng: np.random.Generator) -> np.ndarray:
        """Realized reward of every arm in every round, shape ``(horizon, n)``.

        Drawing the whole table up front gives every policy run with the same
        seed the same reward stream (common random numbers).
        """
        mu = np.asarray(mu, dtype=float)
        if self.kind is RewardKind.DEGENERATE:
            return np.broadcast_to(mu, (horizon, mu.size)).copy()
        return (rng.random((horizon, mu.size)) < mu).astype(float)


def save_instance(inst: BanditInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=1) + "\n")


def load_instance(path: str | Path) -> BanditInstance:
    try:
        record = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read instance from {path}: {exc}") from exc
    return BanditInstance.from_dict(record)
