"""Model specifications and their realization on a grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .colourings import (
    Colouring,
    EdgeWeights,
    MonotoneMap,
    RadiusLaw,
    WeightLaw,
    bernoulli_edge_weights,
    boolean_colouring,
    check_phi,
    check_psi,
    conformal_density,
    constant_colouring,
    psi_density,
    sample_poisson,
    sign_colouring,
    thin,
    voronoi_colouring,
    voronoi_margin,
)
from .fields import GridSpec, KernelSpec, ScalarField, sample_bargmann_fock, sample_stationary_spectral
from .rng import RngSeed

MODEL_KINDS = (
    "bargmann-fock",
    "spectral-gaussian",
    "gaussian-psi",
    "voronoi",
    "boolean",
    "conformal",
    "bernoulli-lattice",
    "constant",
)
GAUSSIAN_KINDS = ("bargmann-fock", "spectral-gaussian", "gaussian-psi", "conformal")


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to draw one realization of a random medium.

    Geometry-dependent grids are built by the estimators: `spacing` and
    `margin` (extra field units kept around the region of interest) set
    the policy, `extents` pins a fixed grid instead.
    """

    kind: str
    dimension: int = 2
    spacing: float = 0.25
    margin: float = 4.0
    extents: Optional[tuple] = None
    p: float = 0.0
    intensity: float = 1.0
    coupling_intensity: Optional[float] = None
    density: float = 1.0
    sampler: str = "series"
    tolerance: float = 1e-6
    padding: int = 2
    kernel: KernelSpec = field(default_factory=KernelSpec)
    psi: MonotoneMap = field(default_factory=lambda: MonotoneMap("indicator"))
    phi: MonotoneMap = field(default_factory=lambda: MonotoneMap("exp"))
    radius_law: RadiusLaw = field(default_factory=RadiusLaw)

    def __post_init__(self) -> None:
        if self.extents is not None:
            object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        errs = model_errors(self)
        if errs:
            raise ValueError("; ".join(errs))

    @property
    def is_lattice(self) -> bool:
        return self.kind == "bernoulli-lattice"

    @property
    def grid_spacing(self) -> float:
        return 1.0 if self.is_lattice else self.spacing

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)


def model_errors(m: ModelSpec) -> list[str]:
    """Field-level validation messages; empty when the spec is valid."""
    errs = []
    if m.kind not in MODEL_KINDS:
        return [f"model.kind: unknown model kind {m.kind!r}; expected one of {', '.join(MODEL_KINDS)}"]
    if m.dimension not in (2, 3):
        errs.append("model.dimension: dimension must be 2 or 3")
    if m.kind == "bargmann-fock" and m.dimension != 2:
        errs.append("model.dimension: the Bargmann-Fock field is two-dimensional")
    if not (m.spacing > 0 and math.isfinite(m.spacing)):
        errs.append("grid.spacing: spacing must be > 0")
    if m.margin < 0:
        errs.append("grid.margin: margin must be >= 0")
    if m.extents is not None and (len(m.extents) != m.dimension or any(e < 3 for e in m.extents)):
        errs.append("grid.extents: need one extent >= 3 per axis")
    if m.kind in ("voronoi", "bernoulli-lattice") and not 0 <= m.p <= 1:
        errs.append("model.p: p must lie in [0,1]")
    if not math.isfinite(m.p):
        errs.append("model.p: p must be finite")
    if m.kind in ("voronoi", "boolean"):
        if not m.intensity > 0:
            errs.append("model.intensity: intensity must be > 0")
        if m.coupling_intensity is not None and m.coupling_intensity < m.intensity:
            errs.append("model.coupling_intensity: coupling intensity must be >= intensity")
    if m.kind == "constant" and not (m.density >= 0 and math.isfinite(m.density)):
        errs.append("model.density: constant density must be finite and >= 0")
    if m.sampler not in ("series", "spectral"):
        errs.append("model.sampler: sampler must be 'series' or 'spectral'")
    if m.kind == "bargmann-fock" and m.sampler == "series" and m.dimension != 2:
        errs.append("model.sampler: series sampler needs dimension 2")
    if not 0 < m.tolerance < 1:
        errs.append("model.tolerance: truncation tolerance must lie in (0,1)")
    if m.padding < 2:
        errs.append("model.padding: circulant padding factor must be >= 2")
    if m.kind == "gaussian-psi":
        try:
            check_psi(m.psi)
        except ValueError as exc:
            errs.append(f"model.psi: {exc}")
    if m.kind == "conformal":
        try:
            check_phi(m.phi)
        except ValueError as exc:
            errs.append(f"model.phi: {exc}")
    return errs


def model_grid(model: ModelSpec, half_widths: Sequence[float], center=None) -> GridSpec:
    """Grid covering center +- (half_widths + margin), or the fixed grid.

    A fixed grid keeps the coordinate origin on a node; the region of
    interest must then fit with the configured margin.
    """
    d = model.dimension
    h = model.grid_spacing
    c = np.zeros(d) if center is None else np.asarray(center, float)
    if model.is_lattice:
        c = np.rint(c)
    if model.extents is None:
        return GridSpec.centered([w + model.margin for w in half_widths], h, c)
    origin = tuple(-h * (e // 2) for e in model.extents)
    grid = GridSpec(d, origin, h, model.extents)
    lo = c - np.asarray(half_widths) - model.margin
    hi = c + np.asarray(half_widths) + model.margin
    if np.any(lo < np.asarray(grid.origin) - 1e-9) or np.any(hi > grid.upper + 1e-9):
        raise ValueError(
            f"domain too small: region [{lo.tolist()}, {hi.tolist()}] with margin {model.margin} "
            f"does not fit the fixed grid {model.extents}"
        )
    return grid


def sample_field(model: ModelSpec, grid: GridSpec, seed: RngSeed) -> ScalarField:
    """The underlying Gaussian field for Gaussian-based models."""
    s = seed.child("field")
    if model.kind == "bargmann-fock":
        if model.sampler == "series":
            return sample_bargmann_fock(grid, None, s, model.tolerance)
        return sample_stationary_spectral(grid, KernelSpec("gaussian", 1.0), s, model.padding)
    if model.kind == "spectral-gaussian" or model.sampler == "spectral":
        return sample_stationary_spectral(grid, model.kernel, s, model.padding)
    if model.kernel.kind == "gaussian" and model.kernel.length_scale == 1.0 and grid.dimension == 2:
        return sample_bargmann_fock(grid, None, s, model.tolerance)
    return sample_stationary_spectral(grid, model.kernel, s, model.padding)


def cloud_margin(model: ModelSpec) -> float:
    if model.kind == "voronoi":
        return voronoi_margin(model.intensity, model.dimension)
    return model.radius_law.truncation()


def realize(model: ModelSpec, grid: GridSpec, seed: RngSeed):
    """One realization of the medium on `grid` (a Colouring or EdgeWeights)."""
    kind = model.kind
    if kind == "constant":
        return constant_colouring(grid, model.density)
    if kind == "bernoulli-lattice":
        return bernoulli_edge_weights(grid, WeightLaw("bernoulli", p=model.p), seed.child("edges"))
    if kind in ("bargmann-fock", "spectral-gaussian"):
        return sign_colouring(sample_field(model, grid, seed), model.p)
    if kind == "gaussian-psi":
        return psi_density(sample_field(model, grid, seed), model.p, model.psi)
    if kind == "conformal":
        return conformal_density(sample_field(model, grid, seed), model.phi)
    m = cloud_margin(model)
    lo = np.asarray(grid.origin) - m
    hi = grid.upper + m
    if kind == "voronoi":
        cloud = sample_poisson(lo, hi, model.intensity, seed.child("cloud"))
        return voronoi_colouring(cloud, model.p, grid, seed.child("colour"))
    lam_ref = model.coupling_intensity or model.intensity
    cloud = sample_poisson(lo, hi, lam_ref, seed.child("cloud"))
    if lam_ref != model.intensity:
        cloud = thin(cloud, model.intensity / lam_ref, seed.child("thin"))
    return boolean_colouring(cloud, model.radius_law, grid, seed.child("radius"))
