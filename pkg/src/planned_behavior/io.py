"""CSV and JSON writers.

Floats are written so they read back bit-identically: ``%.17g`` in CSV and
Python's shortest round-trip repr in JSON.  Non-finite values become empty
CSV fields and JSON ``null``.  Individuals are numbered from 1 in every file.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import is_dataclass
from typing import Iterable, Sequence

import numpy as np

from .analytic import ActionBounds, Classification

__all__ = [
    "fmt",
    "jsonable",
    "write_csv",
    "write_json",
    "dumps",
    "trajectory_rows",
    "event_rows",
    "write_trajectory",
    "write_events",
]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "%.17g" % v if math.isfinite(v) else ""
    return str(v)


def jsonable(obj):
    """Convert results into plain JSON types."""
    if obj is None or isinstance(obj, (str, bool)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Classification):
        return jsonable(obj.as_dict())
    if isinstance(obj, ActionBounds):
        return {"m": obj.m, "n_after": obj.n_after, "T": jsonable(obj.T),
                "x_T": jsonable(obj.x_T), "x_star": jsonable(obj.x_star),
                "horizon": jsonable(obj.horizon)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if is_dataclass(obj) and hasattr(obj, "as_dict"):
        return jsonable(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2) -> str:
    return json.dumps(jsonable(obj), indent=indent, sort_keys=True, allow_nan=False)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], provenance=None) -> None:
    """Write a CSV; ``provenance`` (any JSON-able object) goes on a leading ``#`` line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if provenance is not None:
            fh.write("# " + json.dumps(jsonable(provenance), sort_keys=True,
                                       separators=(",", ":"), allow_nan=False) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def trajectory_rows(traj):
    n = traj.n
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"y_{i + 1}" for i in range(n)]
    rows = [[t, *x, *y] for t, x, y in zip(traj.t, traj.x, traj.y)]
    return header, rows


def event_rows(traj):
    return ["individual", "t"], [[e.individual + 1, e.t] for e in traj.events]


def write_trajectory(path, traj, provenance=None) -> None:
    write_csv(path, *trajectory_rows(traj), provenance=provenance)


def write_events(path, traj, provenance=None) -> None:
    write_csv(path, *event_rows(traj), provenance=provenance)


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
