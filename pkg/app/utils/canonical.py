"""
Canonical JSON encoding.

Keys are sorted and floats are written with 17 significant digits, so a
document that is loaded and dumped again comes out byte-identical.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

FLOAT_FORMAT = ".17g"
_INDENT = "  "


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot encode non-finite float {value!r}")
    text = format(value, FLOAT_FORMAT)
    # keep floats recognisable as floats after a round trip
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def _encode(obj: Any, level: int) -> str:
    pad = _INDENT * (level + 1)
    end = _INDENT * level

    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(
            f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, level + 1)}"
            for k, v in items
        )
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(f"{pad}{_encode(v, level + 1)}" for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot encode object of type {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    """Return the canonical text of *obj*, newline-terminated."""
    return _encode(obj, 0) + "\n"


def complex_matrix_to_json(matrix: np.ndarray) -> dict[str, list]:
    m = np.asarray(matrix, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def complex_matrix_from_json(doc: dict[str, list]) -> np.ndarray:
    return np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
