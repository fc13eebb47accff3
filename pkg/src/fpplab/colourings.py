"""Random densities sigma on grids: Gaussian, Voronoi, Boolean, conformal, lattice."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .fields import GridSpec, ScalarField
from .rng import RngSeed, hash_uniforms

BINARY_MODELS = frozenset({"gaussian-sign", "voronoi", "boolean"})
MODEL_TAGS = BINARY_MODELS | {"gaussian-psi", "conformal", "constant", "generic"}


@dataclass(frozen=True, eq=False)
class Colouring:
    """Nonnegative density on grid nodes; binary for colouring-type models."""

    grid: GridSpec
    density: np.ndarray = field(repr=False)
    model: str = "constant"

    def __post_init__(self) -> None:
        if self.model not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model!r}")
        v = np.array(self.density, dtype=np.float64)
        if v.shape != self.grid.extents:
            raise ValueError(f"density shape {v.shape} != grid extents {self.grid.extents}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("density must be finite and >= 0")
        if self.model in BINARY_MODELS and not np.all((v == 0) | (v == 1)):
            raise ValueError(f"{self.model} colouring must take values in {{0, 1}}")
        v.flags.writeable = False
        object.__setattr__(self, "density", v)

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.density == 0) | (self.density == 1)))

    def scaled(self, c: float) -> "Colouring":
        if c < 0:
            raise ValueError("scale must be >= 0")
        model = self.model if (c == 1 or self.model not in BINARY_MODELS) else "generic"
        return Colouring(self.grid, c * self.density, model)


def constant_colouring(grid: GridSpec, value: float = 1.0) -> Colouring:
    return Colouring(grid, np.full(grid.extents, float(value)), "constant")


# -- monotone maps -----------------------------------------------------------

_PROBES = np.concatenate([-np.logspace(-6, 2, 40)[::-1], [0.0], np.logspace(-6, 2, 40)])


@dataclass(frozen=True)
class MonotoneMap:
    """Closed vocabulary of maps for psi- and phi-densities.

    indicator:       1 if x > 0 else 0
    positive-part:   max(x, 0)
    exp:             exp(rate * x)
    affine-clamped:  clip(offset + slope * x, lower, upper)
    constant:        value
    """

    kind: str
    rate: float = 1.0
    slope: float = 1.0
    offset: float = 0.0
    lower: float = 0.0
    upper: float = math.inf
    value: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("indicator", "positive-part", "exp", "affine-clamped", "constant"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "exp" and self.rate < 0:
            raise ValueError("exp map needs rate >= 0 to be nondecreasing")
        if self.kind == "affine-clamped" and (self.slope < 0 or self.lower > self.upper):
            raise ValueError("affine-clamped map needs slope >= 0 and lower <= upper")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "indicator":
            return (x > 0).astype(float)
        if self.kind == "positive-part":
            return np.maximum(x, 0.0)
        if self.kind == "exp":
            return np.exp(self.rate * x)
        if self.kind == "affine-clamped":
            return np.clip(self.offset + self.slope * x, self.lower, self.upper)
        return np.full_like(x, self.value)


def check_psi(psi: MonotoneMap) -> None:
    """Probe nondecreasing and psi(x) > 0 <=> x > 0."""
    y = psi(_PROBES)
    if np.any(np.diff(y) < 0):
        raise ValueError(f"psi map {psi.kind} is not nondecreasing on probes")
    if not np.array_equal(y > 0, _PROBES > 0):
        raise ValueError(f"psi map {psi.kind} violates psi(x) > 0 <=> x > 0 on probes")


def check_phi(phi: MonotoneMap) -> None:
    """Probe continuity class, strict positivity and monotonicity."""
    if phi.kind in ("indicator", "positive-part"):
        raise ValueError(f"phi map {phi.kind} is not strictly positive")
    y = phi(_PROBES)
    if np.any(y <= 0):
        raise ValueError(f"phi map {phi.kind} returns values <= 0 on probes")
    if np.any(np.diff(y) < 0):
        raise ValueError(f"phi map {phi.kind} is not nondecreasing on probes")


def sign_colouring(f: ScalarField, p: float) -> Colouring:
    """Black (1) where f + p > 0, white (0) where f + p <= 0."""
    return Colouring(f.grid, (f.values + p > 0).astype(np.float64), "gaussian-sign")


def psi_density(f: ScalarField, p: float, psi: MonotoneMap) -> Colouring:
    check_psi(psi)
    return Colouring(f.grid, psi(f.values + p), "gaussian-psi")


def conformal_density(f: ScalarField, phi: MonotoneMap) -> Colouring:
    """sqrt(phi(f)): path time then equals length in the metric phi(f) g0."""
    check_phi(phi)
    return Colouring(f.grid, np.sqrt(phi(f.values)), "conformal")


# -- Poisson clouds ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray = field(repr=False)
    lower: tuple
    upper: tuple
    intensity: float

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64).reshape(-1, len(self.lower))
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if np.any(hi <= lo):
            raise ValueError("generating region must be nonempty")
        if pts.size and (np.any(pts < lo) or np.any(pts > hi)):
            raise ValueError("all points must lie inside the generating region")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lower", tuple(lo.tolist()))
        object.__setattr__(self, "upper", tuple(hi.tolist()))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def covers(self, lower, upper) -> bool:
        return bool(np.all(np.asarray(self.lower) <= np.asarray(lower) + 1e-12)
                    and np.all(np.asarray(self.upper) >= np.asarray(upper) - 1e-12))


def sample_poisson(lower, upper, intensity: float, seed: RngSeed) -> PointCloud:
    """Poisson process of the given intensity on the box [lower, upper]."""
    if intensity < 0:
        raise ValueError(f"intensity must be >= 0, got {intensity}")
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    if np.any(hi <= lo):
        raise ValueError("region must be nonempty")
    rng = seed.generator()
    count = rng.poisson(intensity * float(np.prod(hi - lo)))
    pts = lo + (hi - lo) * rng.random((count, lo.size))
    return PointCloud(pts, tuple(lo), tuple(hi), intensity)


def thin(cloud: PointCloud, fraction: float, seed: RngSeed) -> PointCloud:
    """Independent thinning keyed by per-point hashes.

    Nested in `fraction` for a fixed seed, which couples Boolean models at
    different intensities.
    """
    if not 0 <= fraction <= 1:
        raise ValueError("thinning fraction must lie in [0, 1]")
    keep = hash_uniforms(cloud.points, seed, "thin") < fraction
    return PointCloud(cloud.points[keep], cloud.lower, cloud.upper, cloud.intensity * fraction)


def mean_nn_spacing(intensity: float, dimension: int) -> float:
    """Expected nearest-neighbour distance of a Poisson process."""
    ball = math.pi ** (dimension / 2) / math.gamma(dimension / 2 + 1)
    return math.gamma(1 + 1 / dimension) / (intensity * ball) ** (1 / dimension)


def voronoi_margin(intensity: float, dimension: int) -> float:
    return 3.0 * mean_nn_spacing(intensity, dimension)


def grid_box(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(grid.origin), grid.upper


def nearest_points(cloud: PointCloud, grid: GridSpec) -> np.ndarray:
    """Index of the nearest cloud point for every node; ties go to the lowest index."""
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    nodes = grid.coordinates().reshape(-1, grid.dimension)
    k = min(4, len(cloud))
    dist, idx = cKDTree(cloud.points).query(nodes, k=k)
    if k == 1:
        return idx.reshape(grid.extents)
    # exact distances for the candidates, then lowest index among the minimisers
    diff = nodes[:, None, :] - cloud.points[idx]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    best = d2.min(axis=1, keepdims=True)
    cand = np.where(d2 == best, idx, np.iinfo(np.int64).max)
    return cand.min(axis=1).reshape(grid.extents)


def voronoi_colouring(cloud: PointCloud, p: float, grid: GridSpec, seed: RngSeed) -> Colouring:
    """Each node takes its nearest point's cell colour; cells white w.p. p.

    A cell is white iff its point's hash-uniform is < p, so the colouring is
    monotone (whiter) in p for a fixed cloud and seed.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0,1]")
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    if cloud.intensity > 0:
        lo, hi = grid_box(grid)
        m = voronoi_margin(cloud.intensity, grid.dimension)
        if not cloud.covers(lo - m, hi + m):
            raise ValueError("cloud region does not cover the grid with the Voronoi margin")
    u = hash_uniforms(cloud.points, seed, "voronoi-colour")
    black = (u >= p).astype(np.float64)
    return Colouring(grid, black[nearest_points(cloud, grid)], "voronoi")


@dataclass(frozen=True)
class RadiusLaw:
    """constant: r = r0.  exponential-tail: P(r >= t) = exp(-c t)."""

    kind: str = "constant"
    r0: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if not self.r0 > 0:
                raise ValueError("constant radius r0 must be > 0")
        elif self.kind == "exponential-tail":
            if not self.c > 0:
                raise ValueError("exponential-tail law needs c > 0 so that P(r >= t) <= exp(-c t)")
        else:
            raise ValueError(f"unknown radius law {self.kind!r}")

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.r0)
        return -np.log1p(-u) / self.c

    def truncation(self, level: float = 1e-9) -> float:
        """The 1 - level quantile; clouds need at least this much margin."""
        return float(self.ppf(1.0 - level))


def boolean_radii(cloud: PointCloud, radii: RadiusLaw, seed: RngSeed) -> np.ndarray:
    return radii.ppf(hash_uniforms(cloud.points, seed, "boolean-radius"))


def boolean_colouring(cloud: PointCloud, radii: RadiusLaw, grid: GridSpec, seed: RngSeed) -> Colouring:
    """White (0) inside the union of balls B(x_i, r_i), black (1) elsewhere."""
    lo, hi = grid_box(grid)
    m = radii.truncation()
    if not cloud.covers(lo - m, hi + m):
        raise ValueError(
            f"cloud margin too small: need {m:.4g} beyond the grid for the radius-law quantile"
        )
    black = np.ones(grid.extents)
    if len(cloud) == 0:
        return Colouring(grid, black, "boolean")
    r = boolean_radii(cloud, radii, seed)
    h = grid.spacing
    origin = np.asarray(grid.origin)
    ext = np.asarray(grid.extents)
    axes = [grid.axis_coords(a) for a in range(grid.dimension)]
    for x, rad in zip(cloud.points, r):
        i0 = np.maximum(np.ceil((x - rad - origin) / h).astype(int), 0)
        i1 = np.minimum(np.floor((x + rad - origin) / h).astype(int), ext - 1)
        if np.any(i1 < i0):
            continue
        sl = tuple(slice(a, b + 1) for a, b in zip(i0, i1))
        d2 = sum(
            ((axes[a][sl[a]] - x[a]) ** 2).reshape([-1 if b == a else 1 for b in range(grid.dimension)])
            for a in range(grid.dimension)
        )
        black[sl][d2 <= rad * rad] = 0.0
    return Colouring(grid, black, "boolean")


# -- lattice edge weights ------------------------------------------------------------


@dataclass(frozen=True)
class WeightLaw:
    """bernoulli: 0 w.p. p else 1.  exponential: Exp(rate).  uniform: U[low, high]."""

    kind: str = "bernoulli"
    p: float = 0.5
    rate: float = 1.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "bernoulli":
            if not 0 <= self.p <= 1:
                raise ValueError("p must lie in [0,1]")
        elif self.kind == "exponential":
            if not self.rate > 0:
                raise ValueError("rate must be > 0")
        elif self.kind == "uniform":
            if self.low < 0 or self.high < self.low:
                raise ValueError("weight law must be supported on [0, inf)")
        else:
            raise ValueError(f"unknown weight law {self.kind!r}")

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "bernoulli":
            return (u >= self.p).astype(np.float64)
        if self.kind == "exponential":
            return -np.log1p(-u) / self.rate
        return self.low + (self.high - self.low) * u


@dataclass(frozen=True, eq=False)
class EdgeWeights:
    """One weight per edge of the hypercubic lattice on `grid` (spacing 1).

    weights[a] has the grid shape shortened by one along axis a; entry k is
    the edge between node k and node k + e_a.
    """

    grid: GridSpec
    weights: tuple = field(repr=False)

    def __post_init__(self) -> None:
        if self.grid.spacing != 1:
            raise ValueError("lattice grids have unit spacing")
        ws = []
        for a, w in enumerate(self.weights):
            w = np.array(w, dtype=np.float64)
            shape = list(self.grid.extents)
            shape[a] -= 1
            if w.shape != tuple(shape):
                raise ValueError(f"axis {a} weights have shape {w.shape}, expected {tuple(shape)}")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("edge weights must be finite and >= 0")
            w.flags.writeable = False
            ws.append(w)
        if len(ws) != self.grid.dimension:
            raise ValueError("need one weight array per axis")
        object.__setattr__(self, "weights", tuple(ws))

    @property
    def extents(self) -> tuple:
        return self.grid.extents

    def scaled(self, c: float) -> "EdgeWeights":
        return EdgeWeights(self.grid, tuple(c * w for w in self.weights))


def lattice_grid(extents, origin=None) -> GridSpec:
    d = len(extents)
    return GridSpec(d, tuple(origin) if origin is not None else (0.0,) * d, 1.0, tuple(extents))


def bernoulli_edge_weights(grid_or_extents, law: WeightLaw, seed: RngSeed) -> EdgeWeights:
    """i.i.d. weights, one uniform per edge; monotone in the law parameter for a shared seed."""
    grid = grid_or_extents if isinstance(grid_or_extents, GridSpec) else lattice_grid(grid_or_extents)
    rng = seed.generator()
    ws = []
    for a in range(grid.dimension):
        shape = list(grid.extents)
        shape[a] -= 1
        ws.append(law.from_uniform(rng.random(tuple(shape))))
    return EdgeWeights(grid, tuple(ws))
