"""Run an experiment config end to end: estimator, result table, manifest.

Every run writes into ``<out>/<config-hash>-s<seed>`` (suffixed ``-1``,
``-2``, ... when that directory already exists) three files:

* ``results.csv``  rows in the fixed :data:`fpplab.io.RESULT_COLUMNS` schema
* ``manifest.jsonl`` one ``run`` object, then one ``task`` object per stream family
* ``config.toml``  the fully explicit serialised config

Replaying a manifest re-runs the stored config and yields the same
``results.csv`` bytes.
"""
from __future__ import annotations

import contextlib
import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, fields
from .colourings import Colouring
from .config import ExperimentConfig, config_hash, load_config, serialize
from .estimators import (
    ball_shape,
    check_renormalization,
    estimate_crossing,
    estimate_ind,
    estimate_mu,
    estimate_one_arm,
)
from .estimators._common import provenance, replicate, stream
from .io import cloud_csv, edge_csv, grid_csv, results_csv, write_binary
from .metric import RectSpec
from .models import model_grid, realize, sample_field
from .stats import mean_estimate

GAUSSIAN_KINDS = ("bargmann-fock", "spectral-gaussian", "gaussian-psi", "conformal")


@dataclass
class RunManifest:
    config_hash: str
    master_seed: int
    out_dir: Path
    tasks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    versions: dict = field(default_factory=dict)
    wall_time: float = 0.0
    warnings: int = 0

    def records(self) -> list:
        run = {
            "type": "run",
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "versions": self.versions,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
            "warnings": self.warnings,
        }
        return [run] + [{"type": "task", **t} for t in self.tasks]


def _versions() -> dict:
    import numba
    import scipy

    return {
        "fpplab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


@contextlib.contextmanager
def node_budget(max_nodes: int):
    """Temporarily replace the grid-size budget."""
    old = fields.MAX_NODES
    fields.MAX_NODES = int(max_nodes)
    try:
        yield
    finally:
        fields.MAX_NODES = old


def _stream_of(prov: str) -> str:
    parts = dict(p.split("=", 1) for p in prov.split(";") if "=" in p)
    return parts.get("stream", "")


def result_row(estimator, quantity, scale=None, est=None, note="", **extra) -> dict:
    row = {"estimator": estimator, "quantity": quantity, "scale": scale, "note": note}
    if est is not None:
        lo, hi = est.ci
        row.update(mean=est.mean, stderr=est.stderr, ci_low=lo, ci_high=hi,
                   replicas=est.replicas, stream=_stream_of(est.provenance))
    row.update(extra)
    return row


class _Timer:
    def __init__(self, manifest: RunManifest, replicas: int, seed: int):
        self.m, self.replicas, self.seed = manifest, replicas, seed

    def task(self, family: str, t0: float) -> None:
        self.m.tasks.append({"stream": family, "master_seed": self.seed,
                             "replicas": f"0..{self.replicas - 1}",
                             "wall_time": round(time.perf_counter() - t0, 6)})


# ---------------------------------------------------------------- estimators

def _white_fraction(model, grid, seed) -> float:
    medium = realize(model, grid, seed)
    if isinstance(medium, Colouring):
        return float(np.mean(medium.density == 0))
    return float(np.mean(np.concatenate([w.ravel() for w in medium.weights]) == 0))


def _run_sample(cfg: ExperimentConfig, out: Path, timer: _Timer, man: RunManifest) -> list:
    m, e = cfg.model, cfg.estimator
    hw = math.floor(e.half_width) if m.is_lattice else e.half_width
    grid = model_grid(m, [hw] * m.dimension)
    fam = stream(cfg.seed, "sample")
    t0 = time.perf_counter()
    first = fam.with_replica(0)
    medium = realize(m, grid, first)
    if isinstance(medium, Colouring):
        write_binary(medium, out / "medium.bin")
        (out / "medium.csv").write_text(grid_csv(medium), encoding="utf-8")
        man.outputs += ["medium.bin", "medium.csv"]
    else:
        (out / "edges.csv").write_text(edge_csv(medium), encoding="utf-8")
        man.outputs.append("edges.csv")
    if m.kind in GAUSSIAN_KINDS:
        f = sample_field(m, grid, first)
        write_binary(f, out / "field.bin")
        (out / "field.csv").write_text(grid_csv(f), encoding="utf-8")
        man.outputs += ["field.bin", "field.csv"]
    if m.kind in ("voronoi", "boolean"):
        _export_cloud(m, grid, first, out, man)
    fr = replicate(_white_fraction, (m, grid), fam, e.replicas, cfg.threads)
    timer.task(fam.label, t0)
    q = "zero_weight_fraction" if m.is_lattice else "white_fraction"
    return [result_row("sample", q, hw, mean_estimate(fr, provenance(fam, e.replicas)))]


def _export_cloud(m, grid, seed, out: Path, man: RunManifest) -> None:
    from .colourings import boolean_radii, sample_poisson, thin
    from .rng import hash_uniforms
    from .models import cloud_margin

    margin = cloud_margin(m)
    lo, hi = np.asarray(grid.origin) - margin, grid.upper + margin
    if m.kind == "voronoi":
        cloud = sample_poisson(lo, hi, m.intensity, seed.child("cloud"))
        uni = hash_uniforms(cloud.points, seed.child("colour"), "voronoi-colour")
        text = cloud_csv(cloud, uniforms=uni)
    else:
        lam = m.coupling_intensity or m.intensity
        cloud = sample_poisson(lo, hi, lam, seed.child("cloud"))
        if lam != m.intensity:
            cloud = thin(cloud, m.intensity / lam, seed.child("thin"))
        text = cloud_csv(cloud, radii=boolean_radii(cloud, m.radius_law, seed.child("radius")))
    (out / "cloud.csv").write_text(text, encoding="utf-8")
    man.outputs.append("cloud.csv")


def _run_mu(cfg, out, timer, man) -> list:
    e = cfg.estimator
    t0 = time.perf_counter()
    curve = estimate_mu(cfg.model, e.direction, e.n_list, e.replicas, cfg.seed, cfg.threads, audit=True)
    rows = []
    for n, est in curve.points:
        timer.task(_stream_of(est.provenance), t0)
        rows.append(result_row("mu", "mu", n, est))
    if curve.triangle_violations:
        rows.append(result_row("mu", "warning", note=f"{curve.triangle_violations} triangle-inequality violations"))
    for n, k, ok in curve.subadditivity:
        if not ok:
            rows.append(result_row("mu", "warning", n + k, note=f"subadditivity check failed for n={n}, m={k}"))
    return rows


def _run_one_arm(cfg, out, timer, man) -> list:
    e = cfg.estimator
    t0 = time.perf_counter()
    curve = estimate_one_arm(cfg.model, e.radii, e.replicas, cfg.seed, e.window, e.inner,
                             cfg.threads, e.audit)
    rows = []
    for r, est in curve.points:
        timer.task(_stream_of(est.provenance), t0)
        rows.append(result_row("one-arm", "one_arm_probability", r, est))
    if curve.exponent is not None:
        rows.append(result_row("one-arm", "exponent", None, curve.exponent))
    else:
        rows.append(result_row("one-arm", "warning", note=curve.note))
    return rows


def _run_crossing(cfg, out, timer, man) -> list:
    e = cfg.estimator
    rect = RectSpec(tuple(e.rect_lower), tuple(e.rect_upper), e.axis)
    t0 = time.perf_counter()
    pts = estimate_crossing(cfg.model, rect, e.scales, e.colour, e.replicas, cfg.seed, cfg.threads)
    rows = []
    for s, est in pts:
        timer.task(_stream_of(est.provenance), t0)
        rows.append(result_row("crossing", "crossing_probability", s, est))
    return rows


def _run_ind(cfg, out, timer, man) -> list:
    e = cfg.estimator
    t0 = time.perf_counter()
    est = estimate_ind(cfg.model, e.Q, e.S, e.delta, e.replicas, cfg.seed, e.inner, cfg.threads)
    timer.task(_stream_of(est.provenance), t0)
    return [result_row("ind", "ind", e.Q, est)]


def _run_renorm(cfg, out, timer, man) -> list:
    e = cfg.estimator
    t0 = time.perf_counter()
    rep = check_renormalization(cfg.model, e.Q, e.R, e.S, e.delta, e.replicas, cfg.seed, cfg.threads)
    rows = []
    for q, est in (("lhs", rep.lhs), ("p_small", rep.p_small), ("ind", rep.ind)):
        timer.task(_stream_of(est.provenance), t0)
        rows.append(result_row("renorm", q, rep.S if q == "lhs" else rep.R, est))
    rows.append(result_row("renorm", "rhs", rep.S, None, mean=rep.rhs, ci_low=rep.rhs_low,
                     ci_high=rep.rhs_high, replicas=e.replicas))
    rows.append(result_row("renorm", "c_d", rep.S, None, mean=rep.c_d,
                     note="covering counts " + " ".join(map(str, rep.covering_counts))))
    rows.append(result_row("renorm", "N", rep.S, None, mean=rep.N))
    rows.append(result_row("renorm", "n", rep.S, None, mean=rep.n))
    note = rep.verdict + (" (vacuous: n = 0)" if rep.vacuous else "")
    if rep.verdict != "holds":
        note += "; possible explanations: " + " | ".join(rep.explanations)
    rows.append(result_row("renorm", "verdict", rep.S, None, note=note))
    return rows


def _run_ball(cfg, out, timer, man) -> list:
    e = cfg.estimator
    t0 = time.perf_counter()
    fit = ball_shape(cfg.model, e.t_list, e.replicas, cfg.seed, e.bins, cfg.threads)
    timer.task(_stream_of(fit.mu[0].provenance), t0)
    rows = [result_row("ball-shape", "regime", note=fit.regime)]
    for a, est in zip(fit.angles, fit.mu):
        rows.append(result_row("ball-shape", "mu_bin", float(a), est))
    for t in fit.t_list:
        rows.append(result_row("ball-shape", "inradius_growth", t, fit.growth[t]))
    for t, hd, est in zip(fit.t_list, fit.hausdorff, fit.hausdorff_replicas):
        rows.append(result_row("ball-shape", "hausdorff_mean_ball", t, None, mean=hd))
        rows.append(result_row("ball-shape", "hausdorff_replica", t, est))
    if fit.truncated:
        rows.append(result_row("ball-shape", "warning", note=f"{fit.truncated} probe times unreachable in the grid"))
    return rows


RUNNERS = {
    "sample": _run_sample,
    "mu": _run_mu,
    "one-arm": _run_one_arm,
    "crossing": _run_crossing,
    "ind": _run_ind,
    "renorm": _run_renorm,
    "ball-shape": _run_ball,
}


# ---------------------------------------------------------------- driver

def output_dir(out_root, cfg: ExperimentConfig) -> Path:
    """Fresh content-addressed directory; never reuses an existing one."""
    root = Path(out_root)
    base = f"{config_hash(cfg)[:16]}-s{cfg.seed}"
    path, k = root / base, 0
    while path.exists():
        k += 1
        path = root / f"{base}-{k}"
    return path


def run_experiment(cfg: ExperimentConfig, out_root) -> RunManifest:
    """Execute the configured estimator and persist results and manifest."""
    out = output_dir(out_root, cfg)
    out.mkdir(parents=True)
    man = RunManifest(config_hash(cfg), cfg.seed, out, versions=_versions())
    (out / "config.toml").write_text(serialize(cfg), encoding="utf-8")
    timer = _Timer(man, cfg.estimator.replicas, cfg.seed)
    t0 = time.perf_counter()
    with node_budget(cfg.max_nodes):
        rows = RUNNERS[cfg.estimator.kind](cfg, out, timer, man)
    man.wall_time = round(time.perf_counter() - t0, 6)
    man.warnings = sum(r["quantity"] == "warning" for r in rows)
    (out / "results.csv").write_text(results_csv(rows), encoding="utf-8")
    man.outputs = ["config.toml", "results.csv"] + man.outputs + ["manifest.jsonl"]
    with open(out / "manifest.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for rec in man.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return man


def replay_manifest(run_dir, out_root: Optional[os.PathLike] = None) -> RunManifest:
    """Re-run a finished run from its stored config into a fresh directory."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.jsonl", encoding="utf-8") as fh:
        run = json.loads(fh.readline())
    cfg = load_config((run_dir / "config.toml").read_text(encoding="utf-8"))
    if config_hash(cfg) != run["config_hash"] or cfg.seed != run["master_seed"]:
        raise ValueError("stored config does not match the manifest")
    return run_experiment(cfg, out_root if out_root is not None else run_dir.parent)
