"""CSV and JSON persistence with embedded provenance.

Every file carries the resolved scenario configuration and the package
version so results can be reproduced from the file alone.  CSV files put the
provenance in '#'-prefixed header lines followed by a column-name row; all
documented schemas are plain numeric columns.

Schemas
-------
power_trace.csv   t_s, re_a, im_a, photon_n, power_dbm
snapshot_*.csv    detuning_hz, m_bar_over_n, jx_over_n, jy_over_n, jz_over_n, j_bar_over_n
dicke_trace.csv   t_s, class_index, detuning_hz, j_bar_over_n, m_bar_over_n
spectrum.csv      detuning_hz, reflectance
sweep_results.csv axis column, echo1..3 power/visibility, grating f and R, status
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ._version import __version__
from .errors import ConfigError


def _meta_header(meta: dict) -> str:
    lines = [f"# version: {__version__}"]
    for key, value in meta.items():
        lines.append(f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}")
    return "\n".join(lines) + "\n"


def write_csv(path: str | Path, columns: dict[str, np.ndarray], meta: dict) -> Path:
    path = Path(path)
    arrays = [np.asarray(v, dtype=float) for v in columns.values()]
    n_rows = len(arrays[0])
    if any(len(a) != n_rows for a in arrays):
        raise ValueError("all columns must have equal length")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(_meta_header(meta))
        fh.write(",".join(columns.keys()) + "\n")
        data = np.column_stack(arrays) if arrays else np.empty((0, 0))
        for row in data:
            fh.write(",".join(format(x, ".12g") for x in row) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    meta: dict = {}
    names: list[str] = []
    rows: list[list[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, raw = body.partition(":")
                    raw = raw.strip()
                    try:
                        meta[key.strip()] = json.loads(raw)
                    except json.JSONDecodeError:
                        meta[key.strip()] = raw
                continue
            if not names:
                names = [c.strip() for c in line.split(",")]
                continue
            rows.append([float(x) for x in line.split(",")])
    if not names:
        raise ConfigError(f"no column header found in {path}")
    table = np.array(rows, dtype=float) if rows else np.empty((0, len(names)))
    return meta, {name: table[:, i] for i, name in enumerate(names)}


def _jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: str | Path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"version": __version__, **meta, **payload}
    with open(path, "w") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    with open(path) as fh:
        return json.load(fh)
