"""Shapes of rescaled pseudometric balls B_t / t."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..fields import BudgetError, GridSpec
from ..metric import _run
from ..models import ModelSpec, realize
from ..rng import RngSeed
from ..stats import Estimate, mean_estimate
from ._common import SeedLike, check_replicas, provenance, replicate, stream

N_SUPPORT = 720


def support_directions(count: int = N_SUPPORT) -> np.ndarray:
    th = 2 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(th), np.sin(th)])


def support_function(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """h(u) = max_x <x, u> over the convex hull of `points`."""
    pts = np.asarray(points, float)
    if len(pts) >= 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    return (pts @ directions.T).max(axis=0)


def hausdorff_support(h1: np.ndarray, h2: np.ndarray) -> float:
    """Hausdorff distance of two convex bodies from sampled support functions."""
    return float(np.max(np.abs(np.asarray(h1) - np.asarray(h2))))


def chamfer_ball_vertices(scale: float = 1.0) -> np.ndarray:
    """Unit ball of the 8-neighbour chamfer norm: the regular octagon
    with vertices on the unit circle along axes and diagonals."""
    th = np.pi / 4 * np.arange(8)
    return scale * np.column_stack([np.cos(th), np.sin(th)])


@dataclass
class NormBallFit:
    regime: str                               # "norm" or "vanishing"
    angles: np.ndarray = field(repr=False)
    mu: list = field(repr=False)              # Estimate per angular bin (symmetrised)
    hull: Optional[np.ndarray] = field(default=None, repr=False)
    t_list: list = field(default_factory=list)
    hausdorff: list = field(default_factory=list)          # mean-ball distance per t
    hausdorff_replicas: list = field(default_factory=list)  # Estimate per t
    mean_support: dict = field(default_factory=dict, repr=False)
    growth: dict = field(default_factory=dict)  # t -> Estimate of inradius of B_t / t
    truncated: int = 0
    grid: Optional[GridSpec] = None


def _probe_nodes(grid: GridSpec, radius: float, bins: int) -> tuple[np.ndarray, np.ndarray]:
    th = 2 * math.pi * np.arange(bins) / bins
    pts = radius * np.column_stack([np.cos(th), np.sin(th)])
    nodes = np.array([grid.nearest_node(p) for p in pts])
    return th, nodes


def _ball_task(model: ModelSpec, grid: GridSpec, t_list, probe_r, bins, seed: RngSeed):
    medium = realize(model, grid, seed)
    centre = np.array([grid.flat_index(grid.nearest_node((0.0, 0.0)))])
    dist = _run(medium, centre).reshape(grid.extents)
    coords = grid.coordinates()
    _, nodes = _probe_nodes(grid, probe_r, bins)
    pos = coords[tuple(nodes.T)]
    mu = dist[tuple(nodes.T)] / np.linalg.norm(pos, axis=1)
    dirs = support_directions()
    supports = []
    inradius = []
    r = np.linalg.norm(coords, axis=-1)
    for t in t_list:
        inside = dist <= t
        supports.append(support_function(coords[inside], dirs) / t)
        outside = ~inside
        inradius.append((r[outside].min() if outside.any() else r.max()) / t)
    touches = bool(np.any(dist[r >= probe_r] <= max(t_list)))
    return mu, np.array(supports), np.array(inradius), touches


def _choose_grid(model: ModelSpec, t_max: float, bins: int, seed: RngSeed) -> tuple:
    h = model.grid_spacing
    half = 1.25 * t_max + model.margin
    floor = 2 * h / t_max
    while True:
        grid = GridSpec.centered([half, half], h)
        probe_r = half - model.margin - h
        mu, _, _, touches = _ball_task(model, grid, [t_max], probe_r, bins, seed)
        if np.max(mu) < floor or not touches:
            return grid, probe_r
        half *= 1.5
        GridSpec.centered([half, half], h)  # raises BudgetError when too large


def ball_shape(
    model: ModelSpec,
    t_list,
    replicas: int,
    seed: SeedLike,
    bins: int = 16,
    threads: int = 1,
) -> NormBallFit:
    """Rescaled balls B_t/t against K = {mu <= 1} fitted from directional mu.

    mu(theta) is T(0, x_theta)/|x_theta| at probe nodes on the largest circle
    the grid allows, symmetrised under v -> -v. When every bin is vanishing
    (95% CI contains 0 and mean below 2h/t_max) the fit is skipped and the
    growth of the inradius of B_t/t is reported instead.
    """
    check_replicas(replicas)
    if model.dimension != 2:
        raise ValueError("ball_shape supports planar models")
    ts = list(t_list)
    if not ts or any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 0:
        raise ValueError("t_list must be positive and strictly increasing")
    if bins < 16 or bins % 2:
        raise ValueError("need an even number of at least 16 angular bins")
    fam = stream(seed, "ball-shape")
    grid, probe_r = _choose_grid(model, ts[-1], bins, fam.with_replica(0))
    out = replicate(_ball_task, (model, grid, ts, probe_r, bins), fam, replicas, threads)
    prov = provenance(fam, replicas)
    mus = np.array([o[0] for o in out])
    sym = 0.5 * (mus + np.roll(mus, bins // 2, axis=1))
    angles = 2 * math.pi * np.arange(bins) / bins
    mu_est = [mean_estimate(sym[:, k], prov) for k in range(bins)]
    supports = np.array([o[1] for o in out])      # (replicas, t, directions)
    inradius = np.array([o[2] for o in out])
    fit = NormBallFit("norm", angles, mu_est, t_list=ts, grid=grid,
                      truncated=int(sum(o[3] for o in out)))
    fit.mean_support = {t: supports[:, i].mean(axis=0) for i, t in enumerate(ts)}
    fit.growth = {t: mean_estimate(inradius[:, i], prov) for i, t in enumerate(ts)}
    floor = 2 * model.grid_spacing / ts[-1]
    vanishing = [(e.ci[0] <= 0 <= e.ci[1]) and e.mean < floor for e in mu_est]
    if all(vanishing):
        fit.regime = "vanishing"
        return fit
    m = np.array([max(e.mean, 1e-300) for e in mu_est])
    pts = np.column_stack([np.cos(angles), np.sin(angles)]) / m[:, None]
    fit.hull = pts[ConvexHull(pts).vertices]
    dirs = support_directions()
    hk = support_function(fit.hull, dirs)
    for i, t in enumerate(ts):
        fit.hausdorff.append(hausdorff_support(fit.mean_support[t], hk))
        per = [hausdorff_support(supports[r, i], hk) for r in range(len(out))]
        fit.hausdorff_replicas.append(mean_estimate(per, prov))
    return fit
