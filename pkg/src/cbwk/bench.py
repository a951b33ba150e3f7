"""Experiment driver: sweeps, replications, aggregation and result files."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .instance import BanditInstance, RewardKind, RewardModel, gen_iid_uniform, gen_tiered
from .online import POLICY_NAMES, GREEDY_UCB, AlphaUcb, RadUcb, canonical_policy_name, make_policy
from .sim import opt_lp, pseudo_regret, run_episode

REGRET_BENCHMARK = (
    "OPT_LP: optimum of the fractional LP relaxation on the true means; "
    "it upper-bounds the optimal policy's expected reward, so reported regret is an upper bound"
)

EXPERIMENTS = ("EXP1", "EXP2", "EXP3", "EXP4", "custom")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep. ``sweep`` names the varied quantity, "B" or "T".

    Sweeping B needs ``horizon``; sweeping T needs ``budget`` or
    ``budget_ratio`` (B = ratio * T).
    """

    experiment: str = "custom"
    n: int = 10
    sweep: str = "T"
    grid: tuple[float, ...] = (500, 1000, 2000)
    horizon: int | None = None
    budget: float | None = None
    budget_ratio: float | None = 1.575
    generator: str = "iid"
    replications: int = 50
    seed: int = 0
    policies: tuple[str, ...] = POLICY_NAMES
    alpha: float = 5.0
    ucb: str = "alpha"
    kappa: float = 1.0
    per_round_budget: float | None = None
    reward: str = "bernoulli"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "policies", tuple(canonical_policy_name(p) for p in self.policies))
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.grid:
            raise ConfigError("sweep grid is empty")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.policies:
            raise ConfigError("no policies configured")
        if self.sweep == "B":
            if self.horizon is None:
                raise ConfigError("sweeping B requires a fixed horizon")
        elif self.sweep == "T":
            if (self.budget is None) == (self.budget_ratio is None):
                raise ConfigError("sweeping T requires exactly one of budget, budget_ratio")
            if any(int(v) != v or v < 1 for v in self.grid):
                raise ConfigError("T grid must hold positive integers")
        else:
            raise ConfigError(f"sweep must be 'B' or 'T', got {self.sweep!r}")
        if self.generator not in ("iid", "tiered"):
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator == "tiered" and self.n != 4:
            raise ConfigError("tiered generator has exactly 4 arms")
        if self.ucb not in ("alpha", "rad"):
            raise ConfigError(f"unknown ucb variant {self.ucb!r}")
        RewardKind(self.reward)

    def point(self, value: float) -> tuple[float, int]:
        """(budget, horizon) at one sweep value."""
        if self.sweep == "B":
            return float(value), int(self.horizon)
        T = int(value)
        budget = self.budget if self.budget is not None else self.budget_ratio * T
        return float(budget), T

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_DESK = {
    "EXP1": dict(n=10, sweep="B", horizon=2000, grid=(100, 500, 1000, 2000, 5000), budget=None, budget_ratio=None),
    "EXP2": dict(n=10, sweep="T", budget=6400.0, budget_ratio=None, grid=(500, 1000, 2000, 4000)),
    "EXP3": dict(n=10, sweep="T", budget_ratio=1.575, grid=(500, 1000, 2000, 4000)),
    "EXP4": dict(n=4, sweep="T", budget_ratio=1.575, generator="tiered", grid=(100, 500, 1000, 2000)),
}
_FULL = {
    "EXP1": dict(horizon=5000, grid=(100, 1000, 5000, 10000, 20000, 50000)),
    "EXP2": dict(budget=80000.0, grid=(1000, 5000, 10000, 20000, 50000)),
    "EXP3": dict(grid=(1000, 5000, 10000, 20000, 50000)),
    "EXP4": dict(grid=(100, 500, 1000, 1500, 2000)),
}


def preset(name: str, full_scale: bool = False, **overrides) -> ExperimentConfig:
    """Desk-scale (default) or full-scale parameters for EXP1..EXP4."""
    if name not in _DESK:
        raise ConfigError(f"no preset named {name!r}")
    kw = dict(experiment=name, replications=50, **_DESK[name])
    if full_scale:
        kw.update(_FULL[name], replications=100)
    kw.update(overrides)
    return ExperimentConfig(**kw)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_config(path: str | Path, full_scale: bool = False, **overrides) -> ExperimentConfig:
    """Read a flat TOML file of ExperimentConfig keys; unknown keys are errors.

    When ``experiment`` names a preset, file keys override that preset.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    unknown = set(raw) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {sorted(unknown)}")
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; tables found: {nested}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    name = raw.get("experiment", "custom")
    if name in _DESK:
        return preset(name, full_scale, **raw)
    return ExperimentConfig(**raw)


# --------------------------------------------------------------------------
# running

def _rep_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0])


def make_instance(config: ExperimentConfig, value: float, rep: int) -> BanditInstance:
    """Instance for one (sweep value, replication).

    Means and costs depend only on (seed, rep), so a replication sees the
    same arms at every sweep point.
    """
    budget, horizon = config.point(value)
    s = _rep_seed(config.seed, rep)
    if config.generator == "tiered":
        return gen_tiered(s, horizon=horizon, budget=budget)
    return gen_iid_uniform(config.n, horizon, budget, s)


def _ucb_variant(config: ExperimentConfig, inst: BanditInstance):
    if config.ucb == "rad":
        return RadUcb.default(inst.n, inst.horizon, config.kappa)
    return AlphaUcb(config.alpha)


def run_replication(config: ExperimentConfig, point: int, rep: int) -> dict[str, tuple[float, float]]:
    """Pseudo-regret and OPT_LP of every policy on one replication."""
    value = config.grid[point]
    inst = make_instance(config, value, rep)
    model = RewardModel(RewardKind(config.reward))
    ep_seed = _rep_seed(config.seed, rep, point, 1)
    opt = opt_lp(inst)
    out = {}
    for name in config.policies:
        policy = make_policy(name, _ucb_variant(config, inst), config.per_round_budget)
        trace = run_episode(inst, policy, model, ep_seed)
        out[name] = (pseudo_regret(trace, inst), opt)
    return out


def _run_task(args):
    config, point, rep = args
    return point, rep, run_replication(config, point, rep)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    policy: str
    sweep: str
    sweep_value: float
    mean_regret: float
    std_regret: float
    cov: float
    mean_opt_lp: float
    replications: int
    seed: int


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def sorted(self) -> "ResultTable":
        return ResultTable(sorted(self.rows, key=lambda r: (r.policy, r.sweep_value)))

    def policies(self) -> list[str]:
        return sorted({r.policy for r in self.rows})

    def series(self, policy: str) -> list[ResultRow]:
        return sorted((r for r in self.rows if r.policy == policy), key=lambda r: r.sweep_value)

    def lookup(self, policy: str, value: float) -> ResultRow:
        for r in self.rows:
            if r.policy == policy and r.sweep_value == value:
                return r
        raise KeyError((policy, value))


def aggregate(config: ExperimentConfig, results: dict[tuple[int, int], dict[str, tuple[float, float]]]) -> ResultTable:
    rows = []
    for point, value in enumerate(config.grid):
        keys = sorted(k for k in results if k[0] == point)
        for name in config.policies:
            regrets = [results[k][name][0] for k in keys]
            opts = [results[k][name][1] for k in keys]
            mean = math.fsum(regrets) / len(regrets)
            std = statistics.stdev(regrets) if len(regrets) > 1 else 0.0
            rows.append(ResultRow(
                experiment=config.experiment,
                policy=name,
                sweep=config.sweep,
                sweep_value=float(value),
                mean_regret=mean,
                std_regret=std,
                cov=std / mean if mean > 0 else math.nan,
                mean_opt_lp=math.fsum(opts) / len(opts),
                replications=len(regrets),
                seed=config.seed,
            ))
    return ResultTable(rows).sorted()


def run_experiment(config: ExperimentConfig, order: Sequence[tuple[int, int]] | None = None) -> ResultTable:
    """Run every (sweep point, replication) and aggregate per policy and point.

    ``order`` permutes execution; the table does not depend on it.
    """
    tasks = list(order) if order is not None else [
        (p, r) for p in range(len(config.grid)) for r in range(config.replications)
    ]
    results = {}
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            for point, rep, res in pool.map(_run_task, [(config, p, r) for p, r in tasks]):
                results[point, rep] = res
    else:
        for p, r in tasks:
            results[p, r] = run_replication(config, p, r)
    return aggregate(config, results)


# --------------------------------------------------------------------------
# files

CSV_COLUMNS = [f.name for f in dataclasses.fields(ResultRow)]


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def emit_csv(table: ResultTable, path: str | Path) -> Path:
    if not table.rows:
        raise ValueError("refusing to write an empty result table")
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in table.sorted().rows:
                w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path: str | Path) -> ResultTable:
    types = {f.name: f.type for f in dataclasses.fields(ResultRow)}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for k, v in rec.items():
                kind = types[k]
                kw[k] = int(v) if kind == "int" else float(v) if kind == "float" else v
            rows.append(ResultRow(**kw))
    return ResultTable(rows)


def plot_series(table: ResultTable, normalize_to: str | None = None) -> dict[str, list[tuple[float, ...]]]:
    """Per-policy (sweep value, mean regret[, ratio to ``normalize_to``])."""
    if normalize_to is not None:
        normalize_to = canonical_policy_name(normalize_to)
        if normalize_to not in table.policies():
            raise ValueError(f"normalization policy {normalize_to!r} not in table")
        base = {r.sweep_value: r.mean_regret for r in table.series(normalize_to)}
        bad = [v for v, m in base.items() if not m > 0]
        if bad:
            raise ValueError(f"{normalize_to} has non-positive mean regret at {bad}")
    out = {}
    for name in table.policies():
        pts = []
        for r in table.series(name):
            if normalize_to is None:
                pts.append((r.sweep_value, r.mean_regret))
            else:
                if r.sweep_value not in base:
                    raise ValueError(f"{normalize_to} missing at sweep value {r.sweep_value}")
                pts.append((r.sweep_value, r.mean_regret, r.mean_regret / base[r.sweep_value]))
        out[name] = pts
    return out


def emit_plotdata(table: ResultTable, path: str | Path, normalize_to: str | None = None) -> Path:
    """Whitespace-separated blocks, one per policy, separated by blank lines
    (gnuplot ``index`` layout)."""
    series = plot_series(table, normalize_to)
    sweep = table.rows[0].sweep if table.rows else "x"
    lines = []
    for name, pts in series.items():
        lines.append(f"# policy: {name}")
        lines.append(f"# {sweep} mean_regret" + (f" ratio_to_{normalize_to}" if normalize_to else ""))
        lines.extend(" ".join(_fmt(float(x)) for x in p) for p in pts)
        lines.extend(["", ""])
    path = Path(path)
    path.write_text("\n".join(lines))
    return path


def write_metadata(config: ExperimentConfig, path: str | Path) -> Path:
    meta = {
        "package_version": __version__,
        "seed": config.seed,
        "config_hash": config.digest(),
        "config": config.to_dict(),
        "regret_benchmark": REGRET_BENCHMARK,
        "rng": "numpy PCG64 via SeedSequence([seed, replication, ...])",
    }
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def run_and_save(config: ExperimentConfig, out_dir: str | Path) -> ResultTable:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = run_experiment(config)
    emit_csv(table, out / "results.csv")
    norm = GREEDY_UCB if GREEDY_UCB in config.policies else None
    try:
        emit_plotdata(table, out / "plotdata.txt", norm)
    except ValueError:
        # e.g. zero regret in the high-budget regime
        emit_plotdata(table, out / "plotdata.txt")
    write_metadata(config, out / "metadata.json")
    return table
