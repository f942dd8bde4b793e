"""Run every shipped config and print the checks of each recipe.

    python scripts/run_all.py [--workers 4] [--out results] [--only ssc,loss-decay]
"""

import argparse
import pathlib
import sys
import time

from slqlab.harness import ExperimentConfig, run_experiment

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", help="comma-separated recipe names")
    args = ap.parse_args()
    wanted = set(args.only.split(",")) if args.only else None
    failed = 0
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = ExperimentConfig.load(str(path))
        if wanted and cfg.recipe not in wanted:
            continue
        cfg.out = args.out
        t0 = time.perf_counter()
        report = run_experiment(cfg, workers=args.workers)
        print(f"== {cfg.recipe} ({time.perf_counter() - t0:.1f} s)")
        for c in report.checks:
            print(f"   {'PASS' if c.passed else 'FAIL'} {c.name} {c.detail}")
        failed += not report.passed
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
