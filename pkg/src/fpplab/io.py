"""Flat binary and CSV exports for grids, point clouds and result tables.

Binary grid files::

    b"FPPLAB01"  uint32-LE header length  JSON header  float64-LE values

The JSON header records the kind, dimension, origin, spacing and extents;
values follow in row-major order. Time fields store unreachable nodes as
the `unreachable` sentinel named in the header.
"""
from __future__ import annotations

import csv
import io as _io
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .colourings import Colouring, EdgeWeights, PointCloud
from .fields import GridSpec, ScalarField
from .metric import TimeField

MAGIC = b"FPPLAB01"
UNREACHABLE = -1.0


def _payload(obj) -> tuple[dict, np.ndarray]:
    if isinstance(obj, ScalarField):
        return {"kind": "scalar-field"}, obj.values
    if isinstance(obj, Colouring):
        return {"kind": "colouring", "model": obj.model}, obj.density
    if isinstance(obj, TimeField):
        vals = np.where(np.isfinite(obj.time), obj.time, UNREACHABLE)
        return {"kind": "time-field", "unreachable": UNREACHABLE}, vals
    raise TypeError(f"cannot export {type(obj).__name__}")


def _grid_header(grid: GridSpec) -> dict:
    return {
        "dimension": grid.dimension,
        "origin": list(grid.origin),
        "spacing": grid.spacing,
        "extents": list(grid.extents),
        "dtype": "<f8",
        "order": "C",
    }


def to_bytes(obj) -> bytes:
    head, vals = _payload(obj)
    head.update(_grid_header(obj.grid))
    hb = json.dumps(head, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(hb)) + hb + np.ascontiguousarray(vals, dtype="<f8").tobytes()


def write_binary(obj, path) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(obj))
    return path


def read_binary(path_or_bytes):
    """Inverse of write_binary; returns the same kind of object."""
    raw = path_or_bytes if isinstance(path_or_bytes, bytes) else Path(path_or_bytes).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError("not an FPPLAB01 grid file")
    (n,) = struct.unpack("<I", raw[8:12])
    head = json.loads(raw[12:12 + n].decode("utf-8"))
    grid = GridSpec(head["dimension"], tuple(head["origin"]), head["spacing"], tuple(head["extents"]))
    vals = np.frombuffer(raw[12 + n:], dtype="<f8").reshape(grid.extents).astype(np.float64)
    if head["kind"] == "scalar-field":
        return ScalarField(grid, vals)
    if head["kind"] == "colouring":
        return Colouring(grid, vals, head["model"])
    t = np.where(vals == head["unreachable"], np.inf, vals)
    return TimeField(grid, t)


_AXES = ("x", "y", "z")


def grid_csv(obj) -> str:
    """One row per node: coordinates then value (unreachable times as 'inf')."""
    _, vals = _payload(obj) if not isinstance(obj, TimeField) else (None, obj.time)
    grid = obj.grid
    coords = grid.coordinates().reshape(-1, grid.dimension)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(_AXES[: grid.dimension]) + ["value"])
    for c, v in zip(coords, np.asarray(vals).ravel()):
        w.writerow([repr(float(x)) for x in c] + [repr(float(v))])
    return buf.getvalue()


def cloud_csv(cloud: PointCloud, radii=None, uniforms=None) -> str:
    d = cloud.dimension
    cols = list(_AXES[:d])
    extra = []
    if radii is not None:
        cols.append("radius")
        extra.append(np.asarray(radii))
    if uniforms is not None:
        cols.append("colour_uniform")
        extra.append(np.asarray(uniforms))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, p in enumerate(cloud.points):
        w.writerow([repr(float(x)) for x in p] + [repr(float(e[i])) for e in extra])
    return buf.getvalue()


def edge_csv(weights: EdgeWeights) -> str:
    """One row per lattice edge: lower endpoint coordinates, axis, weight."""
    grid = weights.grid
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(_AXES[: grid.dimension]) + ["axis", "weight"])
    for a, arr in enumerate(weights.weights):
        for idx in np.ndindex(arr.shape):
            pos = grid.position(idx)
            w.writerow([repr(float(x)) for x in pos] + [a, repr(float(arr[idx]))])
    return buf.getvalue()


def read_grid_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.reader(_io.StringIO(text)))
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return data[:, :-1], data[:, -1]


RESULT_COLUMNS = ("estimator", "quantity", "scale", "mean", "stderr", "ci_low", "ci_high", "replicas", "stream", "note")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def results_csv(rows: Iterable[dict]) -> str:
    """Result table with the fixed RESULT_COLUMNS schema."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        unknown = set(r) - set(RESULT_COLUMNS)
        if unknown:
            raise KeyError(f"unknown result columns {sorted(unknown)}")
        w.writerow([_fmt(r.get(c)) for c in RESULT_COLUMNS])
    return buf.getvalue()


def read_results_csv(text: str) -> list[dict]:
    reader = csv.DictReader(_io.StringIO(text))
    if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    return list(reader)
