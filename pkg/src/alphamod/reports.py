"""Deterministic report serialisation.

Reports are plain dictionaries written as sorted JSON.  Every report
carries the tool version, the seed and a hash of its configuration.
Wall-clock timings are kept out of report files so that reruns with the
same configuration are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["VERSION", "to_jsonable", "dumps", "config_hash", "make_report", "write_report",
           "write_text"]

VERSION = "0.1.0"


def to_jsonable(obj):
    """Convert numpy scalars and arrays, tuples and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1) + "\n"


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical config JSON."""
    text = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def make_report(kind: str, config: dict, body: dict, seed: int = 0) -> dict:
    return {
        "kind": kind,
        "version": VERSION,
        "seed": int(seed),
        "config": to_jsonable(config),
        "config_hash": config_hash(config),
        **to_jsonable(body),
    }


def write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def write_report(path, report: dict):
    return write_text(path, dumps(report))
