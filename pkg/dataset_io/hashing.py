# dataset_io/hashing.py
"""
Canonical JSON and the trace digest.

Canonical text sorts keys, uses no insignificant whitespace and writes
floats in their shortest round-trip form, so the bytes only depend on the
values.
"""

import hashlib
import json
from typing import Any, Dict, Iterable

import numpy as np


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not serializable: {type(value).__name__}")


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=False,
                      ensure_ascii=False, default=_plain)


def jsonl_bytes(records: Iterable[Dict[str, Any]]) -> bytes:
    return "".join(canonical_json(r) + "\n" for r in records).encode("utf-8")


def digest_bytes(header_line: str, body: bytes) -> str:
    h = hashlib.sha256()
    h.update(header_line.encode("utf-8"))
    h.update(b"\n")
    h.update(body)
    return h.hexdigest()


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
