"""Delimited and JSON writers that print floats with 17 significant digits."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def fmt(x) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return {None: "null", True: "true", False: "false"}[None if obj is None else bool(obj)]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq)
        if flat:
            return "[" + ", ".join(_encode(v, 0, 0) for v in seq) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text where each finite float keeps 17 significant digits (non-finite become null)."""
    return _encode(obj, indent, 0) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
