"""Quasi-independence of annulus events and the multiscale comparison inequality."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..metric import AnnulusSpec, annulus_time
from ..models import ModelSpec, model_grid, realize
from ..rng import RngSeed
from ..stats import Z95, Estimate, proportion_estimate
from ._common import SeedLike, check_replicas, provenance, replicate, stream
from .percolation import annulus_grid, shell_band_for


def covariance_defect(a, b, provenance: str = "") -> Estimate:
    """|P(A and B) - P(A) P(B)| from paired indicator samples.

    The stderr is the delta-method (influence function) error of the
    signed covariance.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 2:
        raise ValueError("need paired samples with at least two replicas")
    n = a.size
    cov = float(np.mean(a * b) - a.mean() * b.mean())
    infl = (a - a.mean()) * (b - b.mean()) - cov
    se = float(infl.std(ddof=1) / math.sqrt(n))
    m = abs(cov)
    return Estimate(m, se, n, provenance, max(0.0, m - Z95 * se), m + Z95 * se)


def pair_geometry(model: ModelSpec, outer: float, gap: float, inner: float = 1.0):
    """Two annuli A_{inner,outer} whose outer balls are `gap` apart, and a grid holding both."""
    d = model.dimension
    off = outer + 0.5 * gap
    ca = (-off,) + (0.0,) * (d - 1)
    cb = (off,) + (0.0,) * (d - 1)
    reach = outer + shell_band_for(model) + model.grid_spacing
    half = [off + reach] + [reach] * (d - 1)
    base = model.with_(margin=0.0) if model.extents is None else model
    grid = model_grid(base, half)
    return grid, AnnulusSpec(ca, inner, outer), AnnulusSpec(cb, inner, outer)


def _pair_task(model, outer, gap, threshold, inner, seed: RngSeed):
    grid, a, b = pair_geometry(model, outer, gap, inner)
    medium = realize(model, grid, seed)
    return annulus_time(medium, a) < threshold, annulus_time(medium, b) < threshold


def pair_events(model, outer, gap, threshold, replicas, family, inner=1.0, threads=1):
    out = replicate(_pair_task, (model, outer, gap, threshold, inner), family, replicas, threads)
    arr = np.array(out, dtype=bool).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def estimate_ind(
    model: ModelSpec,
    Q: float,
    S: float,
    delta: float,
    replicas: int,
    seed: SeedLike,
    inner: float = 1.0,
    threads: int = 1,
) -> Estimate:
    """Covariance defect of {T(A) < delta}, {T(B) < delta} for two annuli of
    diameter S whose outer balls are Q apart."""
    check_replicas(replicas)
    if not (Q > 0 and S / 2 > inner):
        raise ValueError("need Q > 0 and S/2 larger than the inner radius")
    pair_geometry(model, S / 2, Q, inner)
    fam = stream(seed, f"ind/Q={Q}/S={S}")
    a, b = pair_events(model, S / 2, Q, delta, replicas, fam, inner, threads)
    return covariance_defect(a, b, provenance(fam, replicas))


def comparison_scales(Q: float, R: float, S: float) -> tuple[int, int]:
    """N = floor((S-1)/(2R+Q)) shells and n = floor(N Q/(2R+2Q)) fast crossings."""
    N = math.floor((S - 1) / (2 * R + Q))
    n = math.floor(N * Q / (2 * R + 2 * Q))
    return N, n


def _sphere_points(radius: float, dimension: int, resolution: float) -> np.ndarray:
    if dimension == 2:
        m = max(8, int(math.ceil(2 * math.pi * radius / resolution)))
        th = 2 * math.pi * np.arange(m) / m
        return radius * np.column_stack([np.cos(th), np.sin(th)])
    m = max(32, int(math.ceil(4 * math.pi * radius ** 2 / resolution ** 2)))
    i = np.arange(m) + 0.5
    phi = np.arccos(1 - 2 * i / m)
    th = math.pi * (1 + 5 ** 0.5) * i
    return radius * np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)])


def greedy_cover_count(radius: float, dimension: int, resolution: float = 0.05) -> int:
    """Greedy count of unit balls centred on the sphere S(0, radius) covering it.

    The sphere is discretized at `resolution`; candidate centres are the
    same points. Balls are shrunk by the sampling gap so that covering the
    samples covers the continuous sphere. Lazy greedy set cover.
    """
    pts = _sphere_points(radius, dimension, resolution)
    gap = resolution / 2 if dimension == 2 else resolution
    tree = cKDTree(pts)
    cover = tree.query_ball_point(pts, r=1.0 - gap)
    covered = np.zeros(len(pts), bool)
    heap = [(-len(c), i) for i, c in enumerate(cover)]
    heapq.heapify(heap)
    count, remaining = 0, len(pts)
    while remaining > 0:
        neg, i = heapq.heappop(heap)
        gain = int(np.count_nonzero(~covered[cover[i]]))
        if gain == 0:
            continue
        if heap and gain < -heap[0][0]:
            heapq.heappush(heap, (-gain, i))
            continue
        covered[cover[i]] = True
        remaining -= gain
        count += 1
    return count


@dataclass
class RenormReport:
    Q: float
    R: float
    S: float
    delta: float
    N: int
    n: int
    vacuous: bool
    covering_counts: list
    c_d: float
    lhs: Estimate
    p_small: Estimate
    ind: Estimate
    rhs: float
    rhs_low: float
    rhs_high: float
    verdict: str
    explanations: list = field(default_factory=list)


_EXPLANATIONS = [
    "c_d comes from a greedy covering count, an upper bound on the minimal covering",
    "T is the grid pseudometric, not the continuum infimum",
    "Monte-Carlo error in the estimated probabilities and the covariance defect",
    "the covariance defect is measured on annulus events only, a lower bound on the supremum",
]


def _rhs(prefactor: float, n: int, p: float, ind: float) -> float:
    if n == 0:
        return 1.0
    return prefactor ** n * (p ** n + n * ind)


def _annulus_event_task(model, outer, threshold, seed: RngSeed) -> bool:
    ann = AnnulusSpec((0.0,) * model.dimension, 1.0, outer)
    grid = annulus_grid(model, ann)
    return annulus_time(realize(model, grid, seed), ann) < threshold


def check_renormalization(
    model: ModelSpec,
    Q: float,
    R: float,
    S: float,
    delta: float,
    replicas: int,
    seed: SeedLike,
    threads: int = 1,
    resolution: float = 0.05,
) -> RenormReport:
    """Monte-Carlo check of the fast-crossing comparison between scales S and R.

    LHS  = P[T(A_S)/S < delta/(1+Q/R)]
    RHS  = (c_d S^{d-1} R/Q)^n (P[T(A_R)/R < delta]^n + n Ind(Q,S))
    The verdict is "holds" when the LHS upper confidence bound is below the
    RHS lower bound, "violated" in the reverse situation, otherwise
    "inconclusive". With n = 0 the inequality is trivial and never reported
    as violated.
    """
    check_replicas(replicas)
    if not 1 <= Q < R < S:
        raise ValueError("need 1 <= Q < R < S")
    d = model.dimension
    N, n = comparison_scales(Q, R, S)
    counts = [
        greedy_cover_count(1 + (j - 1) * (2 * R + Q) + R, d, resolution) for j in range(1, N + 1)
    ]
    k_max = max(counts) if counts else 0
    c_d = k_max / S ** (d - 1)

    fam_l = stream(seed, f"renorm/lhs/S={S}")
    lhs_ev = replicate(_annulus_event_task, (model, S, delta * S / (1 + Q / R)), fam_l, replicas, threads)
    lhs = proportion_estimate(lhs_ev, provenance(fam_l, replicas))

    fam_p = stream(seed, f"renorm/small/R={R}")
    p_ev = replicate(_annulus_event_task, (model, R, delta * R), fam_p, replicas, threads)
    p_small = proportion_estimate(p_ev, provenance(fam_p, replicas))

    fam_i = stream(seed, f"renorm/ind/R={R}/Q={Q}")
    a, b = pair_events(model, R, Q, delta * R, replicas, fam_i, 1.0, threads)
    ind = covariance_defect(a, b, provenance(fam_i, replicas))

    pref = c_d * S ** (d - 1) * R / Q
    rhs = _rhs(pref, n, p_small.mean, ind.mean)
    rhs_lo = _rhs(pref, n, p_small.ci[0], ind.ci[0])
    rhs_hi = _rhs(pref, n, p_small.ci[1], ind.ci[1])
    lhs_lo, lhs_hi = lhs.ci
    if lhs_hi <= rhs_lo:
        verdict = "holds"
    elif lhs_lo > rhs_hi and n > 0:
        verdict = "violated"
    else:
        verdict = "holds" if n == 0 else "inconclusive"
    return RenormReport(Q, R, S, delta, N, n, n == 0, counts, c_d, lhs, p_small, ind,
                        rhs, rhs_lo, rhs_hi, verdict, list(_EXPLANATIONS))
