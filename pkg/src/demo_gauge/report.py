"""Deterministic report serialization.

Every artifact the CLI writes goes through this module so that a rerun on
identical inputs produces byte-identical files.  Rules: JSON keys sorted,
floats rendered by repr (shortest round-trip form), non-finite floats turned
into the strings "inf"/"-inf"/"nan", numpy containers converted to plain
lists, and a trailing newline on every file.  The one intentionally unstable
value, the generation timestamp, lives on a single top-level line of
report.json so consumers can strip it before comparing runs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from datetime import datetime, timezone

import numpy as np

from .analysis import CorrelationMatrix, FittedModel


def sanitize(obj):
    """Recursively convert to canonical JSON-ready plain-Python values."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, np.generic):
        return sanitize(obj.item())
    if isinstance(obj, float):
        if np.isnan(obj):
            return "nan"
        if np.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def canonical_json(obj) -> str:
    return json.dumps(sanitize(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def model_to_dict(fitted: FittedModel, x_key: dict[str, str] | None = None) -> dict:
    """FittedModel as a JSON-ready dict, with per-term rows sorted by entry."""
    out = dataclasses.asdict(fitted)
    if x_key is not None:
        out["x_key"] = dict(x_key)
    return out


def correlation_rows(cm: CorrelationMatrix):
    """Long-format heatmap rows (row, col, r) covering the full square."""
    for i, a in enumerate(cm.names):
        for j, b in enumerate(cm.names):
            yield a, b, cm.r[i, j]
