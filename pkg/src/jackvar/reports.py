"""Canonical JSON serialization and the shipped report schemas.

Reports must be byte-identical across runs with the same inputs, so
serialization is pinned: sorted keys, two-space indent, UTF-8, trailing
newline, and no NaN/Infinity (non-finite values must be mapped to null or
strings by the caller before serialization).
"""

from __future__ import annotations

import json
from importlib import resources

SCHEMA_VERSION = "1"

__all__ = ["SCHEMA_VERSION", "canonical_json", "load_schema", "validate_report"]


def canonical_json(obj) -> str:
    return (
        json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
        + "\n"
    )


def load_schema(kind: str) -> dict:
    """Load one of the shipped report schemas: ``estimate``, ``oracle``,
    ``experiment``, or ``sweep``."""
    traversable = resources.files("jackvar").joinpath("schemas").joinpath(f"{kind}.json")
    return json.loads(traversable.read_text(encoding="utf-8"))


def validate_report(obj, kind: str) -> None:
    """Validate a report dict against its shipped schema (needs the
    optional ``jsonschema`` package)."""
    import jsonschema

    jsonschema.validate(obj, load_schema(kind))
