"""Readers for the simulator's documented CSV/JSON schemas.

CSV files carry '#'-prefixed provenance lines (key: json-value) followed by a
column-name header row; these readers depend only on that contract, never on
the simulator package.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


class SchemaError(Exception):
    """Input file does not match the documented schema; names the column."""


def read_table(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    meta: dict = {}
    names: list[str] = []
    rows: list[list[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, raw = line[1:].partition(":")
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
        raise SchemaError(f"{path}: no column header found")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    table = np.asarray(rows, dtype=float)
    return meta, {name: table[:, i] for i, name in enumerate(names)}


def require_columns(columns: dict[str, np.ndarray], needed: list[str], path) -> None:
    for name in needed:
        if name not in columns:
            raise SchemaError(f"{path}: missing required column {name!r}; "
                              f"found {sorted(columns)}")


def read_report(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input file not found: {path}")
    with open(path) as fh:
        return json.load(fh)
