"""Grids, scalar fields and stationary Gaussian field samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .rng import RngSeed
from .stats import Estimate, mean_estimate

#: Default ceiling on grid node counts; experiments may lower or raise it.
MAX_NODES = 1 << 25


class BudgetError(RuntimeError):
    """A requested computation exceeds the configured resource budget."""


class TruncationError(ValueError):
    def __init__(self, requested: int, required: int, radius: float, tolerance: float):
        self.requested = requested
        self.required = required
        super().__init__(
            f"truncation N={requested} leaves tail variance above {tolerance:g} at radius "
            f"{radius:.4g}; need N >= {required}"
        )


class EmbeddingError(ValueError):
    def __init__(self, worst: float, padding: int):
        self.worst = worst
        self.suggested_padding = 2 * padding
        super().__init__(
            f"circulant embedding not positive semidefinite: worst eigenvalue {worst:.3e}; "
            f"try padding >= {self.suggested_padding}"
        )


@dataclass(frozen=True)
class GridSpec:
    """Regular grid: node coordinates are origin + spacing * multi-index."""

    dimension: int
    origin: tuple
    spacing: float
    extents: tuple

    def __post_init__(self) -> None:
        if self.dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dimension}")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if len(self.origin) != self.dimension or len(self.extents) != self.dimension:
            raise ValueError("origin and extents must have one entry per axis")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be > 0, got {self.spacing}")
        if any(e < 1 for e in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")
        if self.n_nodes > MAX_NODES:
            raise BudgetError(f"grid with {self.n_nodes} nodes exceeds budget of {MAX_NODES}")

    @classmethod
    def centered(cls, half_widths: Sequence[float], spacing: float, center=None) -> "GridSpec":
        """Smallest grid, symmetric about `center`, covering center +- half_widths.

        The center is always a node when it lies on the spacing lattice.
        """
        d = len(half_widths)
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        k = [int(math.ceil(w / spacing - 1e-9)) for w in half_widths]
        origin = tuple(c[a] - k[a] * spacing for a in range(d))
        return cls(d, origin, spacing, tuple(2 * ka + 1 for ka in k))

    @property
    def shape(self) -> tuple:
        return self.extents

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.extents))

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * (np.asarray(self.extents) - 1)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.extents[axis])

    def coordinates(self) -> np.ndarray:
        """Array of shape (*extents, d) with every node's position."""
        axes = np.meshgrid(*[self.axis_coords(a) for a in range(self.dimension)], indexing="ij")
        return np.stack(axes, axis=-1)

    def nearest_node(self, point) -> tuple:
        x = np.asarray(point, dtype=float)
        idx = np.rint((x - np.asarray(self.origin)) / self.spacing).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.extents)):
            raise ValueError(f"point {tuple(x)} lies outside the grid")
        return tuple(int(i) for i in idx)

    def flat_index(self, node) -> int:
        return int(np.ravel_multi_index(tuple(node), self.extents))

    def position(self, node) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * np.asarray(node, dtype=float)

    def max_radius(self) -> float:
        """Largest distance from the coordinate origin to a grid corner."""
        lo, hi = np.abs(np.asarray(self.origin)), np.abs(self.upper)
        return float(np.linalg.norm(np.maximum(lo, hi)))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.extents:
            raise ValueError(f"values shape {v.shape} != grid extents {self.grid.extents}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class KernelSpec:
    """Stationary isotropic covariance, normalised so that kappa(0) = 1.

    kind "gaussian": kappa(x) = exp(-|x|^2 / (2 l^2)).
    kind "tabulated": piecewise-linear in |x| through (radii, values),
    zero beyond the last radius.
    """

    kind: str = "gaussian"
    length_scale: float = 1.0
    radii: tuple = ()
    values: tuple = ()

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            if not self.length_scale > 0:
                raise ValueError("length_scale must be > 0")
        elif self.kind == "tabulated":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.size < 2 or r.shape != v.shape:
                raise ValueError("tabulated kernel needs matching radii/values with >= 2 entries")
            if r[0] != 0 or np.any(np.diff(r) <= 0):
                raise ValueError("tabulated radii must start at 0 and increase")
            if v[0] <= 0:
                raise ValueError("kappa(0) must be positive")
            object.__setattr__(self, "radii", tuple(r.tolist()))
            object.__setattr__(self, "values", tuple(v.tolist()))
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    def __call__(self, dist) -> np.ndarray:
        r = np.asarray(dist, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (r / self.length_scale) ** 2)
        radii, vals = np.asarray(self.radii), np.asarray(self.values)
        return np.interp(r, radii, vals / vals[0], right=0.0)


def bargmann_fock_tail(radius: float, truncation: int) -> float:
    """Variance the truncated series misses at distance `radius` from 0.

    The discarded variance is exp(-r^2) sum_{k>N} r^{2k}/k!, i.e. the
    upper tail P[Poisson(r^2) > N].
    """
    return float(special.gammainc(truncation + 1, radius * radius))


def bargmann_fock_truncation(radius: float, tolerance: float) -> int:
    """Smallest N whose tail variance at `radius` is <= tolerance."""
    lam = radius * radius
    n = int(max(0.0, lam))
    while bargmann_fock_tail(radius, n) > tolerance:
        n += max(1, int(math.sqrt(lam + 1)) // 4)
    while n > 0 and bargmann_fock_tail(radius, n - 1) <= tolerance:
        n -= 1
    return n


def _bf_basis(t: np.ndarray, n: int) -> np.ndarray:
    """u_i(t) = exp(-t^2/2) t^i / sqrt(i!) for i = 0..n, shape (n+1, len(t))."""
    i = np.arange(n + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.log(np.abs(t))[None, :]
        logu = -0.5 * t[None, :] ** 2 + np.where(i > 0, i * logt, 0.0) - 0.5 * special.gammaln(i + 1)
    u = np.exp(logu)
    u = np.where((t[None, :] == 0) & (i > 0), 0.0, u)
    neg = (t < 0)[None, :] & (i % 2 == 1)
    return np.where(neg, -u, u)


def sample_bargmann_fock(
    grid: GridSpec, truncation: Optional[int], seed: RngSeed, tolerance: float = 1e-6
) -> ScalarField:
    """Bargmann-Fock field from its truncated random series, at every node.

    f(x) = exp(-|x|^2/2) sum_{i+j<=N} a_ij x1^i x2^j / sqrt(i! j!) with
    a_ij i.i.d. standard normal. `truncation=None` picks the minimal N for
    `tolerance`; an explicit N below that is rejected.
    """
    if grid.dimension != 2:
        raise ValueError("the Bargmann-Fock series is two-dimensional")
    radius = grid.max_radius()
    required = bargmann_fock_truncation(radius, tolerance)
    n = required if truncation is None else int(truncation)
    if n < 0:
        raise ValueError("truncation must be >= 0")
    if n < required:
        raise TruncationError(n, required, radius, tolerance)
    if (n + 1) ** 2 > MAX_NODES:
        raise BudgetError(f"Bargmann-Fock truncation N={n} is too large; use the spectral sampler")
    rng = seed.generator()
    a = rng.standard_normal((n + 1, n + 1))
    i, j = np.indices(a.shape)
    a[i + j > n] = 0.0
    u1 = _bf_basis(grid.axis_coords(0), n)
    u2 = _bf_basis(grid.axis_coords(1), n)
    return ScalarField(grid, u1.T @ a @ u2)


def _torus_lags(m: int, spacing: float) -> np.ndarray:
    k = np.arange(m)
    return np.minimum(k, m - k) * spacing


def embedding_spectrum(grid: GridSpec, kernel: KernelSpec, padding: int = 2) -> np.ndarray:
    """Eigenvalues of the circulant embedding of the grid covariance."""
    if padding < 2:
        raise ValueError("padding factor must be >= 2")
    sizes = [padding * e for e in grid.extents]
    lags = np.meshgrid(*[_torus_lags(m, grid.spacing) for m in sizes], indexing="ij")
    dist = np.sqrt(sum(l * l for l in lags))
    return np.fft.fftn(kernel(dist)).real


def sample_stationary_spectral(
    grid: GridSpec, kernel: KernelSpec, seed: RngSeed, padding: int = 2, clip: float = 1e-10
) -> ScalarField:
    """Stationary Gaussian field by circulant embedding on a padded torus."""
    lam = embedding_spectrum(grid, kernel, padding)
    worst = float(lam.min())
    if worst < -clip:
        raise EmbeddingError(worst, padding)
    lam = np.clip(lam, 0.0, None)
    rng = seed.generator()
    z = rng.standard_normal(lam.shape) + 1j * rng.standard_normal(lam.shape)
    w = np.fft.fftn(np.sqrt(lam / lam.size) * z)
    crop = tuple(slice(0, e) for e in grid.extents)
    return ScalarField(grid, w.real[crop])


def empirical_covariance(fields: Sequence[ScalarField], lag) -> Estimate:
    """Cross-replica estimate of E[f(x) f(x + lag*h)] for a centred field.

    Each replica contributes the spatial average of f(x) f(x + lag) over all
    node pairs at that lag; replicas are independent, so the stderr comes
    from their spread.
    """
    if len(fields) == 0:
        raise ValueError("empty replica list")
    if len(fields) < 2:
        raise ValueError("need at least two replicas")
    grid = fields[0].grid
    lag = tuple(int(l) for l in lag)
    if len(lag) != grid.dimension or any(abs(l) >= e for l, e in zip(lag, grid.extents)):
        raise ValueError(f"lag {lag} does not fit extents {grid.extents}")
    a_sl = tuple(slice(max(0, -l), e - max(0, l)) for l, e in zip(lag, grid.extents))
    b_sl = tuple(slice(max(0, l), e - max(0, -l)) for l, e in zip(lag, grid.extents))
    per_replica = [float(np.mean(f.values[a_sl] * f.values[b_sl])) for f in fields]
    return mean_estimate(per_replica, provenance=f"empirical covariance lag={lag}")
