"""One-arm curves, exponent fits and rectangle crossing probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..metric import AnnulusSpec, RectSpec, annulus_time, annulus_zero_crossing, rect_crossing, shell_band
from ..models import ModelSpec, model_grid, realize
from ..rng import RngSeed
from ..stats import Z95, Estimate, proportion_estimate
from ._common import SeedLike, check_replicas, provenance, replicate, stream


class DegenerateFit(ValueError):
    """Exponent fit refused (probabilities of 0 or 1, too few points)."""


def fit_exponent(curve: Sequence, window: Optional[tuple] = None) -> Estimate:
    """Slope of -log P against log x over curve[window[0]:window[1]].

    Weighted least squares with delta-method variances (stderr/P)^2 of log P
    when every point carries a positive stderr; ordinary least squares with
    residual-based stderr otherwise (e.g. exact synthetic data).
    """
    pts = list(curve)[slice(*window)] if window is not None else list(curve)
    if len(pts) < 3:
        raise DegenerateFit("need at least 3 points in the fit window")
    x = np.array([float(p[0]) for p in pts])
    est = [p[1] for p in pts]
    prob = np.array([e.mean if isinstance(e, Estimate) else float(e) for e in est])
    if np.any(prob <= 0) or np.any(prob >= 1):
        raise DegenerateFit("probabilities of 0 or 1 in the fit window")
    se = np.array([e.stderr if isinstance(e, Estimate) else 0.0 for e in est])
    X = np.column_stack([np.ones_like(x), np.log(x)])
    y = -np.log(prob)
    if np.all(se > 0):
        w = (prob / se) ** 2
        cov = np.linalg.inv(X.T @ (w[:, None] * X))
        beta = cov @ (X.T @ (w * y))
        slope_se = math.sqrt(cov[1, 1])
    else:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        dof = len(y) - 2
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(X.T @ X)
        slope_se = math.sqrt(max(cov[1, 1], 0.0))
    slope = float(beta[1])
    n = int(min(e.replicas if isinstance(e, Estimate) else 1 for e in est))
    return Estimate(slope, slope_se, max(n, 1), f"fit over x={x.tolist()}",
                    slope - Z95 * slope_se, slope + Z95 * slope_se)


@dataclass
class OneArmCurve:
    points: list                          # (R, Estimate of P[Cross_0(A_R)])
    exponent: Optional[Estimate] = None
    note: str = ""
    events: dict = field(default_factory=dict, repr=False)

    @property
    def radii(self) -> list:
        return [r for r, _ in self.points]


def annulus_grid(model: ModelSpec, annulus: AnnulusSpec):
    h = model.grid_spacing
    reach = annulus.outer + shell_band_for(model) + h
    base = model.with_(margin=0.0) if model.extents is None else model
    return model_grid(base, [reach] * model.dimension, annulus.center)


def shell_band_for(model: ModelSpec) -> float:
    return model.grid_spacing * math.sqrt(model.dimension) / 2


def _one_arm_task(model: ModelSpec, annulus: AnnulusSpec, audit: bool, seed: RngSeed) -> bool:
    grid = annulus_grid(model, annulus)
    medium = realize(model, grid, seed)
    hit = annulus_zero_crossing(medium, annulus)
    if audit and hit != (annulus_time(medium, annulus) == 0.0):
        raise AssertionError(f"zero-path equivalence failed for replica {seed}")
    return hit


def estimate_one_arm(
    model: ModelSpec,
    radii,
    replicas: int,
    seed: SeedLike,
    window: Optional[tuple] = None,
    inner: float = 1.0,
    threads: int = 1,
    audit: bool = False,
) -> OneArmCurve:
    """P[white crossing of A_{inner,R}] per R, with an optional exponent fit.

    The fit window is an index range into `radii`; None uses every radius.
    """
    check_replicas(replicas)
    rs = list(radii)
    if not rs or any(b <= a for a, b in zip(rs, rs[1:])) or rs[0] <= inner:
        raise ValueError("radii must be strictly increasing and exceed the inner radius")
    centre = (0.0,) * model.dimension
    for r in rs:
        annulus_grid(model, AnnulusSpec(centre, inner, r))
    points, events = [], {}
    for r in rs:
        fam = stream(seed, f"one-arm/R={r}")
        hits = np.array(replicate(_one_arm_task, (model, AnnulusSpec(centre, inner, r), audit),
                                  fam, replicas, threads), dtype=bool)
        events[r] = hits
        points.append((r, proportion_estimate(hits, provenance(fam, replicas))))
    curve = OneArmCurve(points, events=events)
    try:
        curve.exponent = fit_exponent(points, window)
    except DegenerateFit as exc:
        curve.note = f"exponent fit refused: {exc}"
    return curve


def crossing_grid(model: ModelSpec, rect: RectSpec):
    lo, hi = np.asarray(rect.lower), np.asarray(rect.upper)
    centre = 0.5 * (lo + hi)
    base = model.with_(margin=0.0) if model.extents is None else model
    return model_grid(base, 0.5 * (hi - lo), centre)


def _crossing_task(model: ModelSpec, rect: RectSpec, colour: int, seed: RngSeed) -> bool:
    grid = crossing_grid(model, rect)
    return rect_crossing(realize(model, grid, seed), rect, colour)


def estimate_crossing(
    model: ModelSpec,
    rect: RectSpec,
    scales,
    colour: int,
    replicas: int,
    seed: SeedLike,
    threads: int = 1,
) -> list:
    """[(scale, Estimate of P[Cross_colour(scale * rect)])] with Wilson intervals."""
    check_replicas(replicas)
    if model.is_lattice:
        raise ValueError("rectangle crossings are defined for colourings, not lattice weights")
    out = []
    for s in scales:
        r = rect.scaled(s)
        crossing_grid(model, r)
        fam = stream(seed, f"crossing/scale={s}")
        hits = replicate(_crossing_task, (model, r, colour), fam, replicas, threads)
        out.append((s, proportion_estimate(hits, provenance(fam, replicas))))
    return out
