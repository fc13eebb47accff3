"""The random pseudometric T on discretized domains.

Continuum densities live on grid nodes and are integrated along the
8-neighbour (2D) / 26-neighbour (3D) grid graph with trapezoid edge
weights; lattice FPP uses nearest-neighbour edges with their own weights.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._dijkstra import grid_dijkstra, lattice_dijkstra
from .colourings import Colouring, EdgeWeights
from .fields import GridSpec

Medium = Union[Colouring, EdgeWeights]

#: Worst-case ratio of 8-neighbour chamfer length to Euclidean length.
CHAMFER_ANISOTROPY_2D = 1.0 / math.cos(math.pi / 8)


@lru_cache(maxsize=None)
def neighbour_offsets(dimension: int) -> tuple[np.ndarray, np.ndarray]:
    """All king moves and their unit-spacing lengths."""
    offs = [o for o in itertools.product((-1, 0, 1), repeat=dimension) if any(o)]
    arr = np.array(offs, dtype=np.int64)
    return arr, np.sqrt((arr * arr).sum(axis=1)).astype(np.float64)


def connectivity_structure(dimension: int) -> np.ndarray:
    return np.ones((3,) * dimension, dtype=bool)


@dataclass(frozen=True, eq=False)
class TimeField:
    """T(sources, .) per node; unreachable nodes hold +inf."""

    grid: GridSpec
    time: np.ndarray = field(repr=False)
    sources: tuple = ()

    def __post_init__(self) -> None:
        t = np.array(self.time, dtype=np.float64)
        t.flags.writeable = False
        object.__setattr__(self, "time", t)

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.time)

    def __getitem__(self, node) -> float:
        return float(self.time[tuple(node)])


@dataclass(frozen=True)
class AnnulusSpec:
    center: tuple
    inner: float
    outer: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not 0 < self.inner < self.outer:
            raise ValueError(f"annulus needs 0 < r < R, got r={self.inner}, R={self.outer}")


@dataclass(frozen=True)
class RectSpec:
    lower: tuple
    upper: tuple
    axis: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if len(self.lower) != len(self.upper) or any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValueError("rectangle needs a nonempty interior")
        if not 0 <= self.axis < len(self.lower):
            raise ValueError("crossing axis must be < dimension")

    def scaled(self, s: float) -> "RectSpec":
        return RectSpec(tuple(s * v for v in self.lower), tuple(s * v for v in self.upper), self.axis)


def _flat_nodes(grid: GridSpec, nodes) -> np.ndarray:
    """Flat indices from a node tuple, an (k, d) array of nodes, a boolean
    mask, or a 1-D array of flat indices."""
    if isinstance(nodes, tuple):
        nodes = [nodes]
    arr = np.asarray(nodes)
    if arr.dtype == bool:
        if arr.shape != grid.extents:
            raise ValueError("node mask must have the grid shape")
        return np.flatnonzero(arr.ravel()).astype(np.int64)
    if arr.ndim == 2:
        if arr.shape[1] != grid.dimension:
            raise ValueError("nodes must have one index per axis")
        if np.any(arr < 0) or np.any(arr >= np.asarray(grid.extents)):
            raise ValueError("node outside grid")
        return np.ravel_multi_index(tuple(arr.T), grid.extents).astype(np.int64)
    flat = arr.astype(np.int64).ravel()
    if np.any(flat < 0) or np.any(flat >= grid.n_nodes):
        raise ValueError("node outside grid")
    return flat


def _run(medium: Medium, sources, mask=None, targets=None) -> np.ndarray:
    grid = medium.grid
    src = _flat_nodes(grid, sources)
    if src.size == 0:
        raise ValueError("empty source set")
    tgt = np.empty(0, np.int64) if targets is None else _flat_nodes(grid, targets)
    allowed = np.ones(grid.n_nodes, bool) if mask is None else np.asarray(mask, bool).ravel()
    ext = np.asarray(grid.extents, np.int64)
    if isinstance(medium, EdgeWeights):
        wplus = np.zeros((grid.dimension, grid.n_nodes))
        for a, w in enumerate(medium.weights):
            full = np.zeros(grid.extents)
            sl = tuple(slice(0, -1) if b == a else slice(None) for b in range(grid.dimension))
            full[sl] = w
            wplus[a] = full.ravel()
        return lattice_dijkstra(wplus, ext, allowed, src, tgt)
    offs, lens = neighbour_offsets(grid.dimension)
    return grid_dijkstra(medium.density.ravel(), ext, offs, lens * grid.spacing, allowed, src, tgt)


def shortest_time(sigma: Medium, sources, mask=None) -> TimeField:
    """Exact multi-source shortest times on the grid graph.

    `sources` may be node multi-indices (k, d), flat indices, or a boolean
    mask; `mask` restricts the graph to the allowed nodes.
    """
    dist = _run(sigma, sources, mask)
    src = tuple(int(s) for s in _flat_nodes(sigma.grid, sources))
    return TimeField(sigma.grid, dist.reshape(sigma.grid.extents), src)


def lattice_shortest_time(weights: EdgeWeights, source, targets=None) -> np.ndarray:
    """Lattice FPP times from `source` (one vertex or a set) to `targets`."""
    if targets is None:
        return _run(weights, source).reshape(weights.grid.extents)
    tgt = _flat_nodes(weights.grid, targets)
    dist = _run(weights, source, targets=tgt)
    return dist[tgt]


def point_time(sigma: Medium, x, y) -> float:
    """T(x, y). Always run from the lower-indexed endpoint so T is exactly symmetric."""
    fx = int(_flat_nodes(sigma.grid, x)[0])
    fy = int(_flat_nodes(sigma.grid, y)[0])
    if fx == fy:
        return 0.0
    a, b = min(fx, fy), max(fx, fy)
    dist = _run(sigma, np.array([a]), targets=np.array([b]))
    return float(dist[b])


# -- annuli ----------------------------------------------------------------------


def _distance_to(grid: GridSpec, center) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    if c.size != grid.dimension:
        raise ValueError("center dimension mismatch")
    d2 = np.zeros(grid.extents)
    for a in range(grid.dimension):
        x = grid.axis_coords(a) - c[a]
        d2 = d2 + (x * x).reshape([-1 if b == a else 1 for b in range(grid.dimension)])
    return np.sqrt(d2)


def shell_band(grid: GridSpec) -> float:
    return grid.spacing * math.sqrt(grid.dimension) / 2


def annulus_nodes(grid: GridSpec, annulus: AnnulusSpec):
    """(inner shell, outer shell, closed region) boolean masks.

    Shells are nodes within h*sqrt(d)/2 of the sphere; no grid move can
    jump across such a band, so restricting to the region is exact.
    """
    if len(annulus.center) != grid.dimension:
        raise ValueError("annulus dimension mismatch")
    band = shell_band(grid)
    c = np.asarray(annulus.center)
    if np.any(c - annulus.outer - band < np.asarray(grid.origin) - 1e-9) or np.any(
        c + annulus.outer + band > grid.upper + 1e-9
    ):
        raise ValueError("annulus shells do not fit inside the grid")
    r = _distance_to(grid, c)
    inner = np.abs(r - annulus.inner) <= band
    outer = np.abs(r - annulus.outer) <= band
    region = (r >= annulus.inner - band) & (r <= annulus.outer + band)
    if not inner.any() or not outer.any():
        raise ValueError("annulus shell discretization is empty; refine the grid")
    if np.any(inner & outer):
        raise ValueError("annulus too thin for the grid spacing: shells overlap")
    return inner, outer, region


def annulus_time(sigma: Medium, annulus: AnnulusSpec) -> float:
    """T(A_{r,R}): least time from the inner shell to the outer shell."""
    inner, outer, region = annulus_nodes(sigma.grid, annulus)
    dist = _run(sigma, inner, mask=region, targets=outer)
    return float(dist[outer.ravel()].min())


def _zero_components(medium: Medium, region: np.ndarray) -> np.ndarray:
    grid = medium.grid
    if isinstance(medium, Colouring):
        white = (medium.density == 0) & region
        labels, _ = ndimage.label(white, structure=connectivity_structure(grid.dimension))
        return labels
    n = grid.n_nodes
    idx = np.arange(n).reshape(grid.extents)
    rows, cols = [], []
    for a, w in enumerate(medium.weights):
        lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(grid.dimension))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(grid.dimension))
        open_ = (w == 0) & region[lo] & region[hi]
        rows.append(idx[lo][open_])
        cols.append(idx[hi][open_])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    g = coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    labels = lab.reshape(grid.extents) + 1
    return np.where(region, labels, 0)


def annulus_zero_crossing(sigma: Medium, annulus: AnnulusSpec) -> bool:
    """True iff a zero-cost component joins the two shells inside the annulus."""
    inner, outer, region = annulus_nodes(sigma.grid, annulus)
    labels = _zero_components(sigma, region)
    a = np.unique(labels[inner])
    b = np.unique(labels[outer])
    common = np.intersect1d(a[a > 0], b[b > 0])
    return bool(common.size)


# -- rectangle crossings ------------------------------------------------------------------


def _rect_index_ranges(grid: GridSpec, rect: RectSpec):
    if len(rect.lower) != grid.dimension:
        raise ValueError("rectangle dimension mismatch")
    lo = np.ceil((np.asarray(rect.lower) - np.asarray(grid.origin)) / grid.spacing - 1e-9).astype(int)
    hi = np.floor((np.asarray(rect.upper) - np.asarray(grid.origin)) / grid.spacing + 1e-9).astype(int)
    if np.any(lo < 0) or np.any(hi >= np.asarray(grid.extents)) or np.any(hi <= lo):
        raise ValueError("rectangle does not fit inside the grid")
    return lo, hi


def rect_crossing(sigma: Colouring, rect: RectSpec, colour: int) -> bool:
    """Crossing of the box along rect.axis by a component of colour `colour`."""
    if colour not in (0, 1):
        raise ValueError("colour must be 0 or 1")
    if not isinstance(sigma, Colouring) or not sigma.is_binary:
        raise ValueError("crossings need a two-valued colouring")
    lo, hi = _rect_index_ranges(sigma.grid, rect)
    sub = sigma.density[tuple(slice(a, b + 1) for a, b in zip(lo, hi))] == colour
    labels, _ = ndimage.label(sub, structure=connectivity_structure(sigma.grid.dimension))
    first = np.take(labels, 0, axis=rect.axis)
    last = np.take(labels, -1, axis=rect.axis)
    common = np.intersect1d(first[first > 0], last[last > 0])
    return bool(common.size)
