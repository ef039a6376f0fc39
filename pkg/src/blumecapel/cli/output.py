"""CSV / line-delimited JSON writers with a ``#``-prefixed metadata line."""

from __future__ import annotations

import csv
import json
import math

import numpy as np


def _plain(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    obj = _plain(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _cell(value):
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(fh, meta, columns, rows, trailers=(), as_json=False):
    """Write one metadata line, the rows, then ``#``-prefixed summary lines."""
    fh.write("# " + dumps(meta) + "\n")
    if as_json:
        for row in rows:
            fh.write(dumps({c: row.get(c) for c in columns}) + "\n")
    else:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    for trailer in trailers:
        fh.write("# " + dumps(trailer) + "\n")


def read_table(path):
    """Read rows written by :func:`write_table` (CSV or JSON lines)."""
    with open(path) as fh:
        lines = [line for line in fh if line.strip() and not line.startswith("#")]
    if lines and lines[0].lstrip().startswith("{"):
        return [json.loads(line) for line in lines]
    return list(csv.DictReader(lines))
