"""Canonical JSON encoding and strict field extraction helpers.

Every persisted or transmitted JSON artifact (wire frames, event logs,
reports, re-serialized scenarios) goes through ``canonical_json`` so that
equal values always produce identical bytes: UTF-8, lexicographically
sorted keys, no insignificant whitespace, no NaN/Infinity.
"""

from __future__ import annotations

import json
import math
from typing import Any


class FieldError(ValueError):
    """A structurally invalid field at ``path`` inside a JSON document."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def canonical_json(value: Any) -> str:
    return json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def _reject_constant(token: str) -> Any:
    # json.loads accepts NaN/Infinity by default; the wire format does not.
    raise ValueError(f"non-finite constant {token!r} not allowed")


def loads_strict(text: str | bytes) -> Any:
    """json.loads that rejects NaN/Infinity tokens."""
    return json.loads(text, parse_constant=_reject_constant)


def require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise FieldError(f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def as_obj(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise FieldError(path, f"expected object, got {type(value).__name__}")
    return value


def as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise FieldError(path, f"expected array, got {type(value).__name__}")
    return value


def as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise FieldError(path, f"expected string, got {type(value).__name__}")
    return value


def as_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise FieldError(path, f"expected boolean, got {type(value).__name__}")
    return value


def as_int(value: Any, path: str) -> int:
    # bool is an int subclass; a JSON "true" must not pass as 1
    if isinstance(value, bool) or not isinstance(value, int):
        raise FieldError(path, f"expected integer, got {type(value).__name__}")
    return value


def as_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FieldError(path, f"expected number, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise FieldError(path, "number must be finite")
    return out


def no_extra_keys(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise FieldError(f"{path}.{key}" if path else key, "unknown field")
