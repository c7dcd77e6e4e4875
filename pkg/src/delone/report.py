"""JSON report emission and comparison tables.

Floats are written with 17 significant digits so reports round-trip
exactly and diff cleanly. Non-finite values become the strings ``"inf"``,
``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import SchemaError

SCHEMA_VERSION = "1.0"


def jsonable(obj):
    """Plain-Python view of ``obj`` (numpy values, dataclasses, regions, patterns)."""
    from .patterns import BallPattern
    from .pointset import BoxRegion

    if isinstance(obj, BoxRegion):
        return {"lo": list(obj.lo), "hi": list(obj.hi)}
    if isinstance(obj, BallPattern):
        return {"center": list(obj.center), "radius": obj.radius}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.repr}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = "%.17g" % x
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def dumps(obj, indent=1, _level=0):
    """Deterministic JSON text (key order as given, 17-digit floats)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def load_report(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        found = data.get("schema_version") if isinstance(data, dict) else None
        raise SchemaError(f"{path}: schema_version {found!r}, expected {SCHEMA_VERSION!r}")
    for key in ("sample", "results", "skipped"):
        if key not in data:
            raise SchemaError(f"{path}: missing field {key!r}")
    return _restore(data)


def flatten_scalars(obj, prefix=""):
    """``{"a.b.c": number}`` for every numeric leaf reachable through dicts."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(flatten_scalars(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        out[prefix] = obj
    return out


def comparison_table(reports):
    """``(header, rows)`` with one column per report and one row per scalar result."""
    flat = [flatten_scalars(r["results"]) for r in reports]
    keys = []
    for f in flat:
        keys.extend(k for k in f if k not in keys)
    header = ["quantity"] + [r["sample"].get("label", f"report{i}") for i, r in enumerate(reports)]
    rows = [[k] + [f.get(k) for f in flat] for k in keys]
    return header, rows


def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (("%.17g" % v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def table_text(header, rows):
    cells = [header] + [[row[0]] + ["-" if v is None else f"{v:.6g}" for v in row[1:]] for row in rows]
    widths = [max(len(str(r[i])) for r in cells) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
