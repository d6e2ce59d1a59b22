"""Deterministic JSON and CSV emission.

Machine outputs must be byte-identical across runs and thread counts, so we
do not rely on ``json.dumps`` float formatting: every float goes through
``format_float`` (17 significant digits, enough to round-trip IEEE doubles),
dict keys are sorted, and non-finite values use the tokens Infinity,
-Infinity and NaN.
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = ["format_float", "dumps_stable", "csv_lines"]


def format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == 0.0:
        return "0"  # normalizes -0.0
    return format(x, ".17g")


def _emit(obj, out: list) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            if i:
                out.append(", ")
            out.append(json.dumps(key))
            out.append(": ")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_stable(obj) -> str:
    """Serialize to a single JSON line with stable key order and floats."""
    out: list = []
    _emit(obj, out)
    return "".join(out)


def csv_lines(manifest: dict, header: str, rows) -> str:
    """CSV text with the run manifest embedded as a leading comment."""
    lines = [f"# manifest: {dumps_stable(manifest)}", header]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, (float, np.floating)) else str(v)
            for v in row))
    return "\n".join(lines) + "\n"
