"""Time-constant curves T(0, n v) / n."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..fields import GridSpec
from ..metric import _flat_nodes, _run
from ..models import ModelSpec, model_grid, realize
from ..rng import RngSeed
from ..stats import Estimate, combined_stderr, mean_estimate
from ._common import SeedLike, check_replicas, provenance, replicate, stream

# floating-point slack for path-sum rearrangements in the triangle audit
_TRI_RTOL = 1e-12


@dataclass
class MuCurve:
    direction: tuple
    points: list                      # (n, Estimate of T(0, n v) / n)
    samples: dict = field(repr=False)  # n -> per-replica T / n
    triangle_violations: int = 0
    subadditivity: list = field(default_factory=list)  # (n, m, holds)

    @property
    def ns(self) -> list:
        return [n for n, _ in self.points]

    def estimate(self, n) -> Estimate:
        return dict(self.points)[n]


def segment_geometry(model: ModelSpec, v, n: float):
    """Grid and endpoint nodes for a segment of length n along v, centred at 0."""
    v = np.asarray(v, float)
    half = 0.5 * n * np.abs(v)
    grid = model_grid(model, half)
    x0 = grid.nearest_node(-0.5 * n * v)
    x1 = grid.nearest_node(0.5 * n * v)
    mid = grid.nearest_node(np.zeros_like(v))
    return grid, x0, x1, mid


def _mu_task(model: ModelSpec, v, n, audit: bool, seed: RngSeed):
    grid, x0, x1, mid = segment_geometry(model, v, n)
    medium = realize(model, grid, seed)
    f0, f1, fm = (int(_flat_nodes(grid, p)[0]) for p in (x0, x1, mid))
    if not audit:
        return float(_run(medium, np.array([f0]), targets=np.array([f1]))[f1]), True
    d0 = _run(medium, np.array([f0]), targets=np.array([f1, fm]))
    dm = _run(medium, np.array([fm]), targets=np.array([f1]))
    t, left, right = float(d0[f1]), float(d0[fm]), float(dm[f1])
    ok = t <= (left + right) * (1 + _TRI_RTOL) + 1e-300
    return t, ok


def estimate_mu(
    model: ModelSpec,
    v,
    n_list,
    replicas: int,
    seed: SeedLike,
    threads: int = 1,
    audit: bool = True,
) -> MuCurve:
    """Estimates of T(0, n v)/n with an independent stream per n.

    Each replica also audits T(0, nv) <= T(0, m) + T(m, nv) through the
    segment midpoint m; violations are counted, never hidden.
    """
    check_replicas(replicas)
    v = np.asarray(v, float)
    if not math.isclose(float(np.linalg.norm(v)), 1.0, rel_tol=1e-9):
        raise ValueError("direction must be a unit vector")
    if v.size != model.dimension:
        raise ValueError("direction dimension mismatch")
    ns = list(n_list)
    if any(b <= a for a, b in zip(ns, ns[1:])) or not ns or ns[0] <= 0:
        raise ValueError("n_list must be positive and strictly increasing")
    for n in ns:  # fail fast on geometry before spending replicas
        segment_geometry(model, v, n)
    points, samples, bad = [], {}, 0
    for n in ns:
        fam = stream(seed, f"mu/n={n}")
        out = replicate(_mu_task, (model, v, n, audit), fam, replicas, threads)
        t = np.array([o[0] for o in out]) / n
        bad += sum(not o[1] for o in out)
        samples[n] = t
        points.append((n, mean_estimate(t, provenance(fam, replicas))))
    curve = MuCurve(tuple(v.tolist()), points, samples, bad)
    curve.subadditivity = subadditivity_checks(curve)
    return curve


def subadditivity_checks(curve: MuCurve) -> list:
    """mean(n+m) <= weighted means of n and m + 3 combined stderr, for listed pairs."""
    est = dict(curve.points)
    out = []
    for i, a in enumerate(curve.ns):
        for b in curve.ns[i:]:
            if a + b in est:
                e_ab, e_a, e_b = est[a + b], est[a], est[b]
                bound = (e_a.mean * a + e_b.mean * b) / (a + b)
                slack = 3 * combined_stderr(e_ab, e_a, e_b)
                out.append((a, b, bool(e_ab.mean <= bound + slack)))
    return out
