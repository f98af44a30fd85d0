"""Shared primitives: the geometry tag and deterministic JSON emission."""
from __future__ import annotations

import enum
import json
import math

import numpy as np


class Geometry(enum.Enum):
    """Background geometry of a piecewise metric (flat or curvature -1)."""

    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"

    @classmethod
    def from_name(cls, name: str) -> "Geometry":
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown geometry {name!r}; expected 'euclidean' or 'hyperbolic'") from None


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (lossless for binary64)."""
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = format(float(x), ".17g")
    # keep the JSON value typed as a float on re-parse
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with fixed float formatting.

    Floats are written via :func:`format_float`, so identical inputs produce
    byte-identical output and values round-trip exactly. Dict key order is
    preserved as constructed.
    """
    pieces: list[str] = []
    _emit(obj, pieces, 0, indent)
    return "".join(pieces)


def _emit(obj, out: list[str], level: int, indent: int) -> None:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    elif isinstance(obj, np.generic):
        obj = obj.item()

    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(repr(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad = " " * (indent * (level + 1))
        out.append("{\n")
        for n, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be str, got {type(key).__name__}")
            out.append(pad + json.dumps(key) + ": ")
            _emit(value, out, level + 1, indent)
            out.append(",\n" if n + 1 < len(obj) else "\n")
        out.append(" " * (indent * level) + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        pad = " " * (indent * (level + 1))
        out.append("[\n")
        for n, value in enumerate(obj):
            out.append(pad)
            _emit(value, out, level + 1, indent)
            out.append(",\n" if n + 1 < len(obj) else "\n")
        out.append(" " * (indent * level) + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")
