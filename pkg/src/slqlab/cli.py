"""Command line entry point: ``slqlab run <config.json> [options]``.

Exit status is 0 when every check passes, 2 when a threshold check fails
and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from slqlab.harness import RECIPES, ExperimentConfig, run_experiment

log = logging.getLogger("slqlab")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slqlab")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment recipe from a JSON config")
    run.add_argument("config", help="flat JSON config file")
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out")
    run.add_argument("--recipe", choices=RECIPES)
    run.add_argument("--n", help="comma-separated list of n values")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.out is not None:
            cfg["out"] = args.out
        if args.recipe is not None:
            cfg["recipe"] = args.recipe
        if args.n is not None:
            cfg["n_list"] = [int(x) for x in args.n.split(",") if x.strip()]
        config = ExperimentConfig.from_dict(cfg)
        report = run_experiment(config, workers=args.workers)
    except Exception as exc:  # noqa: BLE001
        log.error("error: %s", exc)
        return 1
    for c in report.checks:
        log.info("%s %s %s", "PASS" if c.passed else "FAIL", c.name, c.detail)
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
