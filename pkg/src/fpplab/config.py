"""Experiment configs: flat TOML documents with dotted sections.

Example::

    seed = 7
    model.kind = "bernoulli-lattice"
    model.p = 0.25
    estimator.kind = "one-arm"
    estimator.radii = [4, 8, 16]
    estimator.replicas = 1000

Sections: top level (seed, threads), ``model.*`` (with sub-tables
``model.kernel``, ``model.psi``, ``model.phi``, ``model.radius_law``),
``grid.*`` (spacing, margin, extents), ``estimator.*`` and ``budget.*``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import tomli

from .colourings import MonotoneMap, RadiusLaw
from .fields import MAX_NODES, KernelSpec
from .models import ModelSpec, model_errors

ESTIMATORS = ("sample", "mu", "one-arm", "crossing", "ind", "renorm", "ball-shape")

_REQUIRED = {
    "sample": (),
    "mu": ("direction", "n_list"),
    "one-arm": ("radii",),
    "crossing": ("rect_lower", "rect_upper", "scales"),
    "ind": ("Q", "S", "delta"),
    "renorm": ("Q", "R", "S", "delta"),
    "ball-shape": ("t_list",),
}


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    replicas: int = 100
    direction: Optional[tuple] = None
    n_list: Optional[tuple] = None
    radii: Optional[tuple] = None
    window: Optional[tuple] = None
    inner: float = 1.0
    rect_lower: Optional[tuple] = None
    rect_upper: Optional[tuple] = None
    axis: int = 0
    colour: int = 0
    scales: Optional[tuple] = None
    Q: Optional[float] = None
    R: Optional[float] = None
    S: Optional[float] = None
    delta: Optional[float] = None
    t_list: Optional[tuple] = None
    bins: int = 16
    audit: bool = False
    half_width: float = 8.0


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    estimator: EstimatorSpec
    seed: int
    threads: int = 0
    max_nodes: int = MAX_NODES


class ConfigError(ValueError):
    def __init__(self, errors: list):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_SUBSPECS = {"kernel": KernelSpec, "psi": MonotoneMap, "phi": MonotoneMap, "radius_law": RadiusLaw}
_GRID_KEYS = ("spacing", "margin", "extents")
_MODEL_KEYS = {f.name for f in dataclasses.fields(ModelSpec)} - set(_GRID_KEYS) - set(_SUBSPECS)
_EST_KEYS = {f.name for f in dataclasses.fields(EstimatorSpec)}


def _tuple(v):
    return tuple(_tuple(x) for x in v) if isinstance(v, list) else v


def _build_sub(name, cls, table, errors):
    allowed = {f.name for f in dataclasses.fields(cls)}
    for k in table:
        if k not in allowed:
            errors.append(f"model.{name}.{k}: unknown field")
    try:
        return cls(**{k: _tuple(v) for k, v in table.items() if k in allowed})
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        if name == "radius_law" and "exponential-tail" in msg:
            msg = "exponential-tail constraint violated: " + msg
        errors.append(f"model.{name}: {msg}")
        return None


def _check_estimator(e: EstimatorSpec, dimension: int) -> list:
    errs = []
    if e.replicas < 2:
        errs.append("estimator.replicas: need at least 2 replicas")
    for name in _REQUIRED[e.kind]:
        if getattr(e, name) is None:
            errs.append(f"estimator.{name}: required for estimator {e.kind!r}")
    if e.direction is not None:
        if len(e.direction) != dimension:
            errs.append("estimator.direction: needs one component per axis")
        elif not math.isclose(math.hypot(*e.direction), 1.0, rel_tol=1e-9):
            errs.append("estimator.direction: must be a unit vector")
    for name in ("n_list", "radii", "scales", "t_list"):
        v = getattr(e, name)
        if v is not None and (not v or any(b <= a for a, b in zip(v, v[1:])) or v[0] <= 0):
            errs.append(f"estimator.{name}: must be positive and strictly increasing")
    if e.radii is not None and e.radii and e.radii[0] <= e.inner:
        errs.append("estimator.radii: radii must exceed estimator.inner")
    if e.colour not in (0, 1):
        errs.append("estimator.colour: colour must be 0 or 1")
    if e.kind == "renorm" and None not in (e.Q, e.R, e.S) and not 1 <= e.Q < e.R < e.S:
        errs.append("estimator.Q: need 1 <= Q < R < S")
    if e.kind == "ind" and e.Q is not None and e.Q <= 0:
        errs.append("estimator.Q: Q must be > 0")
    if e.kind == "crossing" and e.rect_lower is not None and e.rect_upper is not None:
        if len(e.rect_lower) != dimension or len(e.rect_upper) != dimension:
            errs.append("estimator.rect_lower: rectangle needs one bound per axis")
        elif any(u <= l for l, u in zip(e.rect_lower, e.rect_upper)):
            errs.append("estimator.rect_upper: rectangle must have nonempty interior")
        if not 0 <= e.axis < dimension:
            errs.append("estimator.axis: crossing axis must be < dimension")
    if e.window is not None and len(e.window) != 2:
        errs.append("estimator.window: expected [start, stop] indices")
    if e.half_width <= 0:
        errs.append("estimator.half_width: must be positive")
    if e.bins < 16 or e.bins % 2:
        errs.append("estimator.bins: need an even number >= 16")
    return errs


def parse_config(data: dict) -> Union[ExperimentConfig, list]:
    """Build a config from a parsed document; returns a list of errors if invalid."""
    errors: list = []
    data = dict(data)
    for k in data:
        if k not in ("seed", "threads", "model", "grid", "estimator", "budget"):
            errors.append(f"{k}: unknown field")
    seed = data.get("seed")
    if seed is None:
        errors.append("seed: missing required field seed")
    elif not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        errors.append("seed: seed must be an unsigned 64-bit integer")
    threads = data.get("threads", 0)
    if not isinstance(threads, int) or threads < 0:
        errors.append("threads: threads must be an integer >= 0 (0 = all cores)")

    mt = dict(data.get("model", {}))
    gt = dict(data.get("grid", {}))
    if "kind" not in mt:
        errors.append("model.kind: missing required field model.kind")
    kw = {}
    for k, v in mt.items():
        if k in _SUBSPECS:
            if not isinstance(v, dict):
                errors.append(f"model.{k}: expected a table")
                continue
            sub = _build_sub(k, _SUBSPECS[k], v, errors)
            if sub is not None:
                kw[k] = sub
        elif k in _MODEL_KEYS:
            kw[k] = _tuple(v)
        else:
            errors.append(f"model.{k}: unknown field")
    for k, v in gt.items():
        if k in _GRID_KEYS:
            kw[k] = _tuple(v)
        else:
            errors.append(f"grid.{k}: unknown field")
    model = None
    if "kind" in mt:
        try:
            probe = ModelSpec.__new__(ModelSpec)
            defaults = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
                        for f in dataclasses.fields(ModelSpec) if f.name != "kind"}
            for name, value in {**defaults, **kw}.items():
                object.__setattr__(probe, name, value)
            merrs = model_errors(probe)
            if merrs:
                errors.extend(merrs)
            else:
                model = ModelSpec(**kw)
        except (TypeError, ValueError) as exc:
            errors.append(f"model: {exc}")

    et = dict(data.get("estimator", {}))
    est = None
    if "kind" not in et:
        errors.append("estimator.kind: missing required field estimator.kind")
    elif et["kind"] not in ESTIMATORS:
        errors.append(f"estimator.kind: unknown estimator {et['kind']!r}")
    else:
        bad = [k for k in et if k not in _EST_KEYS]
        errors.extend(f"estimator.{k}: unknown field" for k in bad)
        try:
            est = EstimatorSpec(**{k: _tuple(v) for k, v in et.items() if k in _EST_KEYS})
            errors.extend(_check_estimator(est, model.dimension if model else 2))
        except TypeError as exc:
            errors.append(f"estimator: {exc}")

    bt = dict(data.get("budget", {}))
    max_nodes = bt.get("max_nodes", MAX_NODES)
    for k in bt:
        if k != "max_nodes":
            errors.append(f"budget.{k}: unknown field")
    if not isinstance(max_nodes, int) or max_nodes < 1:
        errors.append("budget.max_nodes: must be a positive integer")
    if errors:
        return errors
    return ExperimentConfig(model, est, seed, threads, max_nodes)


def validate_config(text: str, overrides: Optional[dict] = None) -> Union[ExperimentConfig, list]:
    """Parse config text; returns the config or a list of field-level errors."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        return [f"<document>: not valid TOML: {exc}"]
    for key, value in (overrides or {}).items():
        node = data
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return parse_config(data)


def load_config(text: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    out = validate_config(text, overrides)
    if isinstance(out, list):
        raise ConfigError(out)
    return out


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {v!r}")


def _diff_items(obj, prefix: str, out: list, skip=()) -> None:
    for f in dataclasses.fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if dataclasses.is_dataclass(v):
            _diff_items(v, f"{prefix}{f.name}.", out)
        elif v is not None:
            out.append((f"{prefix}{f.name}", v))


def serialize(cfg: ExperimentConfig) -> str:
    """Flat dotted-key TOML; every field written explicitly."""
    items = [("seed", cfg.seed), ("threads", cfg.threads)]
    model_items: list = []
    _diff_items(cfg.model, "model.", model_items)
    for k, v in model_items:
        name = k.split(".", 1)[1]
        items.append((f"grid.{name}" if name in _GRID_KEYS else k, v))
    _diff_items(cfg.estimator, "estimator.", items)
    items.append(("budget.max_nodes", cfg.max_nodes))
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in items)


def config_hash(cfg: ExperimentConfig) -> str:
    """Content hash of everything that affects results (not seed or threads)."""
    body = "".join(line for line in serialize(cfg).splitlines(True)
                   if not line.startswith(("seed ", "threads ")))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()
