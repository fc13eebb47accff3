"""One-arm probabilities and the fitted decay exponent for a config.

    python scripts/one_arm.py --config configs/critical_bond_one_arm.toml
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

from fpplab.config import load_config
from fpplab.experiments import run_experiment


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=Path("configs/critical_bond_one_arm.toml"))
    ap.add_argument("--replicas", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", type=Path, default=Path("runs/one_arm"))
    args = ap.parse_args(argv)

    overrides = {"estimator.kind": "one-arm"}
    if args.replicas is not None:
        overrides["estimator.replicas"] = args.replicas
    if args.threads is not None:
        overrides["threads"] = args.threads
    cfg = load_config(args.config.read_text(encoding="utf-8"), overrides)
    man = run_experiment(cfg, args.out)
    with open(Path(man.out_dir) / "results.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            ci = f"[{row['ci_low']}, {row['ci_high']}]" if row["ci_low"] else ""
            print(f"{row['quantity']:<22} {row['scale']:>5} {row['mean']:>12} {ci} {row['note']}")
    print(f"outputs in {man.out_dir}")


if __name__ == "__main__":
    main()
