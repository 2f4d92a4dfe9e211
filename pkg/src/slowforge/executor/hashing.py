"""Order-insensitive 64-bit result-set digests.

Each row is serialized canonically (typed cell prefixes joined by the unit
separator 0x1F), hashed with FNV-1a 64, and the sorted row digests are hashed
again. Sorting makes the digest invariant under any row-order permutation, so
equal digests mean equal result multisets regardless of execution order or
engine. The digest of an empty result set is the FNV-1a offset basis
(14695981039346656037), a fixed documented sentinel.

Cell canonicalization (shared across sqlite and PostgreSQL backends):
  NULL -> ``n:``            int -> ``i:<decimal>``       bool -> ``i:0|i:1``
  float/Decimal -> ``f:<shortest round-trip decimal>``   str -> ``s:<utf-8>``
  date/datetime -> ``s:<isoformat>``                     bytes -> ``b:<hex>``
"""

from __future__ import annotations

import datetime
import decimal
from typing import Iterable, Sequence

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MASK64 = (1 << 64) - 1

EMPTY_RESULT_DIGEST = FNV_OFFSET

_UNIT_SEP = b"\x1f"


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def canonical_cell(value: object) -> bytes:
    if value is None:
        return b"n:"
    if isinstance(value, bool):
        return b"i:1" if value else b"i:0"
    if isinstance(value, int):
        return b"i:%d" % value
    if isinstance(value, float):
        return b"f:" + repr(value).encode()
    if isinstance(value, decimal.Decimal):
        return b"f:" + repr(float(value)).encode()
    if isinstance(value, str):
        return b"s:" + value.encode("utf-8")
    if isinstance(value, (datetime.date, datetime.datetime)):
        return b"s:" + value.isoformat().encode()
    if isinstance(value, (bytes, bytearray)):
        return b"b:" + bytes(value).hex().encode()
    raise TypeError(f"cannot canonicalize cell of type {type(value).__name__}")


def canonical_row(row: Sequence[object]) -> bytes:
    return _UNIT_SEP.join(canonical_cell(v) for v in row)


def result_hash(rows: Iterable[Sequence[object]]) -> int:
    digests = sorted(fnv1a64(canonical_row(r)) for r in rows)
    combined = b"".join(d.to_bytes(8, "big") for d in digests)
    return fnv1a64(combined)


def text_fingerprint(*parts: str) -> int:
    """64-bit fingerprint of one or more text fragments (query cache keys)."""
    h = FNV_OFFSET
    for part in parts:
        for byte in part.encode("utf-8"):
            h ^= byte
            h = (h * FNV_PRIME) & MASK64
        h ^= 0x1F
        h = (h * FNV_PRIME) & MASK64
    return h
