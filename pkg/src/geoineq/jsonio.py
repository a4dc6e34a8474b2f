"""Deterministic JSON emission.

Reports must be byte-identical across runs and partitioning schemes, so
we control the serialization ourselves: insertion-ordered keys, floats
printed at 12 significant digits, two-space indent, LF line endings.
"""

from __future__ import annotations

import json
import math


def format_float(x: float, mode: str = "12g") -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value in report: {x!r}")
    if mode == "repr":  # shortest round-trip form, for ground-truth files
        return repr(x)
    return format(x, ".12g")


def dumps(obj, float_mode: str = "12g") -> str:
    out: list[str] = []
    _write(obj, out, 0, float_mode)
    out.append("\n")
    return "".join(out)


def _write(obj, out: list[str], depth: int, float_mode: str = "12g") -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj, float_mode))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad = "  " * (depth + 1)
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be str, got {k!r}")
            out.append(pad)
            out.append(json.dumps(k, ensure_ascii=False))
            out.append(": ")
            _write(v, out, depth + 1, float_mode)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append("  " * depth + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        pad = "  " * (depth + 1)
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _write(v, out, depth + 1, float_mode)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append("  " * depth + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
