"""Canonical JSON emission for byte-reproducible exports.

Two serializations of equal data must be byte-identical regardless of the
insertion order of mappings, so exports can be diffed and checksummed:

* object keys emitted in sorted order,
* compact separators (no whitespace),
* floats rendered with ``%.17g`` (17 significant digits round-trip exactly
  through a binary64 parse, so export -> import -> export is the identity),
* non-finite floats rejected (JSON has no representation for them).

Arrays keep their given order; order-sensitive data belongs in arrays.
"""

from __future__ import annotations

import json
import math


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite float not representable in canonical JSON: {value!r}")
    return format(float(value), ".17g")


def dumps(obj) -> str:
    """Serialize nested dict/list/str/int/float/bool/None canonically."""
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj, parts: list[str]) -> None:
    # bool first: bool is a subclass of int
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _emit(item, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON object keys must be strings, got {type(key).__name__}")
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _emit(obj[key], parts)
        parts.append("}")
    else:
        raise TypeError(f"type {type(obj).__name__} is not serializable to canonical JSON")
