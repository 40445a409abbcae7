"""Helpers for the JSON-based on-disk documents.

All documents are plain JSON. Floats are written with Python's shortest
round-trip representation (at most 17 significant digits), so a written
document re-read with `loads` reproduces every stored value bit for bit.
Keys are sorted and a trailing newline is appended, which makes repeated
writes of the same object byte-identical.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import DocumentError


def jsonable(obj: Any) -> Any:
    """Convert numpy containers/scalars into plain Python structures."""
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentError("top-level JSON value must be an object")
    return doc


def save(doc: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def load(path) -> dict:
    with open(path) as fh:
        return loads(fh.read())


def get(doc: dict, field: str, kind=None):
    """Fetch a required field, raising DocumentError naming the field."""
    if field not in doc:
        raise DocumentError(f"missing required field '{field}'")
    value = doc[field]
    if kind is not None and not isinstance(value, kind):
        raise DocumentError(f"field '{field}' has wrong type {type(value).__name__}")
    return value


def as_float_array(value, field: str, shape=None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(f"field '{field}' is not numeric: {exc}") from exc
    if not np.all(np.isfinite(arr)):
        raise DocumentError(f"field '{field}' contains non-finite values")
    if shape is not None and arr.shape != tuple(shape):
        raise DocumentError(
            f"field '{field}' has shape {arr.shape}, expected {tuple(shape)}"
        )
    return arr
