"""Sweep the level p of a colouring model and record the time constant.

Each p gets its own content-addressed run directory under --out; a
summary table (p, n, mean, stderr) is printed at the end.

    python scripts/phase_sweep.py --config configs/bf_mu.toml --p -0.5 0 0.5
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

from fpplab.config import load_config
from fpplab.experiments import run_experiment


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=Path("configs/bf_mu.toml"))
    ap.add_argument("--p", type=float, nargs="+", default=[-0.5, -0.25, 0.0, 0.25, 0.5])
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path, default=Path("runs/phase_sweep"))
    args = ap.parse_args(argv)

    text = args.config.read_text(encoding="utf-8")
    print(f"{'p':>7} {'n':>6} {'mu_hat':>10} {'stderr':>10}")
    for p in args.p:
        overrides = {"model.p": p, "estimator.kind": "mu"}
        if args.seed is not None:
            overrides["seed"] = args.seed
        man = run_experiment(load_config(text, overrides), args.out)
        with open(Path(man.out_dir) / "results.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                if row["quantity"] == "mu":
                    print(f"{p:7.3f} {row['scale']:>6} {float(row['mean']):10.5f} {float(row['stderr']):10.5f}")


if __name__ == "__main__":
    main()
