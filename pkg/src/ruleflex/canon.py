"""Canonical JSON serialization and content addressing.

Every persisted document is hashed over this canonical form: keys sorted,
no insignificant whitespace, shortest round-trip numerals, UTF-8. Identical
payloads therefore always share an id, across processes and platforms.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def normalize_number(value: Any) -> Any:
    """Collapse float-typed integers so 38.0 and 38 share one canonical form.

    Bools pass through untouched (bool is an int subclass in Python).
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def content_id(payload: Any) -> str:
    """sha256 hex digest of the canonical serialization."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
