"""Small helpers shared by the reports and the command line."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from enum import Enum


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float):
        return repr(obj) if not math.isfinite(obj) else obj
    return obj


def to_plain(obj):
    """Dataclasses, enums and containers as JSON-ready builtins."""
    return _plain(obj)


def config_digest(obj) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def fmt(x) -> str:
    """Float with 17 significant digits (lossless round trip)."""
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)
