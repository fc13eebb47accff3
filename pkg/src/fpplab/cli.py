"""Command-line front end.

    fpplab <subcommand> --config run.toml [--seed N] [--threads N] [--out DIR]

The subcommand selects the estimator and overrides ``estimator.kind`` in
the config; ``validate`` only checks the config. Exit codes: 0 success
(including runs with warning rows), 2 invalid config, 3 resource budget
exceeded.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ESTIMATORS, validate_config
from .experiments import run_experiment
from .fields import BudgetError, EmbeddingError, TruncationError

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fpplab", description="First-passage percolation experiments")
    ap.add_argument("command", choices=list(ESTIMATORS) + ["validate"])
    ap.add_argument("--config", required=True, type=Path, help="TOML experiment config")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker count, 0 = all cores")
    ap.add_argument("--out", type=Path, default=Path("runs"), help="output root directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.command != "validate":
        overrides["estimator.kind"] = args.command
    cfg = validate_config(text, overrides)
    if isinstance(cfg, list):
        for err in cfg:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print("ok")
        return EXIT_OK
    try:
        man = run_experiment(cfg, args.out)
    except BudgetError as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (TruncationError, EmbeddingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if man.warnings:
        print(f"{man.warnings} warning row(s) in results.csv", file=sys.stderr)
    print(man.out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
