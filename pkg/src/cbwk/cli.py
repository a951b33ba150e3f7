"""Command line entry point: ``cbwk run | solve | plotdata | episode``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import bench
from .instance import InstanceError, RewardKind, RewardModel, load_instance
from .offline import cbwk_greedy, cbwk_greedy_2approx, dp_exact, lp_opt_fractional
from .online import make_policy
from .sim import pseudo_regret, run_episode

log = logging.getLogger("cbwk")


def _policies(text: str | None):
    return None if text is None else [p for p in text.split(",") if p.strip()]


def cmd_run(args) -> int:
    overrides = dict(seed=args.seed, replications=args.reps, policies=_policies(args.policies), workers=args.workers)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config:
        config = bench.load_config(args.config, full_scale=args.full_scale, **overrides)
    else:
        config = bench.preset(args.experiment, full_scale=args.full_scale, **overrides)
    log.info("running %s: %d points x %d replications", config.experiment, len(config.grid), config.replications)
    table = bench.run_and_save(config, args.out)
    for row in table.rows:
        print(f"{row.policy:16s} {row.sweep}={row.sweep_value:<8g} regret={row.mean_regret:.4g} +- {row.std_regret:.3g}")
    print(f"wrote {args.out}/results.csv, plotdata.txt, metadata.json")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    mu, c, B, T = inst.mu, inst.cost, inst.budget, inst.horizon
    if args.algo == "lp":
        sol = lp_opt_fractional(mu, c, B, T)
        out = {"zeta": list(sol.zeta), "opt_value": sol.opt_value}
    else:
        if args.algo == "greedy":
            alloc = cbwk_greedy(mu, c, B, T)
        elif args.algo == "greedy2":
            alloc = cbwk_greedy_2approx(mu, c, B, T)
        else:
            alloc = dp_exact(mu, c, B, T, args.scale)
        out = alloc.to_dict()
    print(json.dumps(out, indent=1))
    return 0


def cmd_plotdata(args) -> int:
    table = bench.read_csv(args.input)
    if args.out:
        bench.emit_plotdata(table, args.out, args.normalize)
    else:
        for name, pts in bench.plot_series(table, args.normalize).items():
            print(f"# policy: {name}")
            for p in pts:
                print(" ".join(f"{x:.6g}" for x in p))
            print("\n")
    return 0


def cmd_episode(args) -> int:
    inst = load_instance(args.instance)
    trace = run_episode(inst, make_policy(args.policy), RewardModel(RewardKind(args.reward)), args.seed)
    if args.out:
        trace.write_csv(args.out)
    else:
        sys.stdout.write(trace.to_csv())
    print(f"# pseudo-regret vs OPT_LP: {pseudo_regret(trace, inst):.6g}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cbwk", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a regret experiment")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="flat TOML experiment config")
    src.add_argument("--experiment", choices=["EXP1", "EXP2", "EXP3", "EXP4"], help="built-in preset")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="results")
    r.add_argument("--policies", help="comma-separated, e.g. greedy-ucb,lp-ucb,fixed-budget")
    r.add_argument("--reps", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--full-scale", action="store_true", help="use the original (slow) grids and 100 replications")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("solve", help="offline solvers on a serialized instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--algo", choices=["greedy", "greedy2", "dp", "lp"], default="greedy")
    s.add_argument("--scale", type=int, default=100, help="cost scaling factor for dp")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("plotdata", help="line-plot series from a results CSV")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--normalize", help="policy whose regret is scaled to 1")
    d.add_argument("--out")
    d.set_defaults(func=cmd_plotdata)

    e = sub.add_parser("episode", help="run one episode and print its per-round trace")
    e.add_argument("--instance", required=True)
    e.add_argument("--policy", default="greedy-ucb")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--reward", choices=[k.value for k in RewardKind], default="bernoulli")
    e.add_argument("--out")
    e.set_defaults(func=cmd_episode)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (bench.ConfigError, InstanceError, ValueError, OSError) as exc:
        print(f"cbwk: error: {exc}", file=sys.stderr)
        return 2
