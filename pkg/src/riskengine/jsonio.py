"""Canonical JSON with fixed 4-decimal rendering for money-like fields.

Wrap a value in ``Money`` to serialize it as a JSON number with exactly
four fractional digits (the display convention for currency amounts and
margin factors).  Other floats use ``repr``, the shortest round-tripping
form, so state snapshots are loss-free.  Output is locale-independent.
"""

from __future__ import annotations

import json
import math

import numpy as np


class Money(float):
    """Marker: serialize this float with exactly 4 decimal places."""


def fmt_money(x: float) -> str:
    return f"{float(x):.4f}"


def dumps(obj, indent: int | None = None) -> str:
    out: list[str] = []
    _write(obj, out, indent, 0)
    return "".join(out)


def _write(obj, out: list[str], indent: int | None, depth: int) -> None:
    nl = "" if indent is None else "\n" + " " * (indent * (depth + 1))
    nl_close = "" if indent is None else "\n" + " " * (indent * depth)
    if isinstance(obj, (np.bool_, np.integer, np.floating)):
        obj = obj.item()
    if isinstance(obj, Money):
        out.append(fmt_money(obj))
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite number {obj}")
        out.append(repr(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"object keys must be strings, got {type(k)}")
            if not first:
                out.append(",")
            out.append(nl)
            out.append(json.dumps(k))
            out.append(": " if indent is not None else ":")
            _write(v, out, indent, depth + 1)
            first = False
        out.append(nl_close if not first else "")
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        first = True
        for v in obj:
            if not first:
                out.append(",")
            out.append(nl)
            _write(v, out, indent, depth + 1)
            first = False
        out.append(nl_close if not first else "")
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")
