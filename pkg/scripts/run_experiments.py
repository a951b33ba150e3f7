#!/usr/bin/env python3
"""Run the four regret experiments and write one result directory each.

    python scripts/run_experiments.py --out results            # desk scale
    python scripts/run_experiments.py --full-scale --workers 8 # original grids, slow
"""
import argparse
import time
from pathlib import Path

from cbwk import bench
from cbwk.online import GREEDY_UCB


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--experiments", default="EXP1,EXP2,EXP3,EXP4")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--full-scale", action="store_true")
    args = ap.parse_args()

    for name in args.experiments.split(","):
        overrides = dict(seed=args.seed, workers=args.workers)
        if args.reps:
            overrides["replications"] = args.reps
        cfg = bench.preset(name, full_scale=args.full_scale, **overrides)
        start = time.perf_counter()
        table = bench.run_and_save(cfg, Path(args.out) / name)
        print(f"== {name} ({time.perf_counter() - start:.0f}s)")
        for value in cfg.grid:
            base = table.lookup(GREEDY_UCB, float(value)).mean_regret
            cells = []
            for policy in cfg.policies:
                r = table.lookup(policy, float(value))
                rel = f" ({r.mean_regret / base:.2f}x)" if base > 0 else ""
                cells.append(f"{policy} {r.mean_regret:.1f} cov {r.cov:.2f}{rel}")
            print(f"  {cfg.sweep}={value:g}: " + " | ".join(cells))


if __name__ == "__main__":
    main()
