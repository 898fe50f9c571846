"""Fixed-width record format and the order-invariant file checksum.

A record file is a bare concatenation of 100-byte records: a 10-byte key of
printable ASCII followed by a 90-byte payload. There are no headers and no
delimiters. Bulk code works on ``(n, 100)`` uint8 arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import MalformedFileError

RECORD_SIZE = 100
KEY_SIZE = 10
PAYLOAD_SIZE = RECORD_SIZE - KEY_SIZE

PRINTABLE_MIN = 32
PRINTABLE_MAX = 126

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1

# records per chunk for streaming scans (~6.5 MB)
SCAN_CHUNK = 1 << 16


@dataclass(frozen=True)
class Record:
    key: bytes
    payload: bytes

    def __post_init__(self) -> None:
        if len(self.key) != KEY_SIZE or len(self.payload) != PAYLOAD_SIZE:
            raise ValueError(
                f"record needs a {KEY_SIZE}-byte key and {PAYLOAD_SIZE}-byte payload, "
                f"got {len(self.key)} and {len(self.payload)}"
            )
        if any(b < PRINTABLE_MIN or b > PRINTABLE_MAX for b in self.key):
            raise ValueError(f"key {self.key!r} has non-printable bytes")

    def to_bytes(self) -> bytes:
        return self.key + self.payload

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Record":
        if len(raw) != RECORD_SIZE:
            raise ValueError(f"expected {RECORD_SIZE} bytes, got {len(raw)}")
        return cls(bytes(raw[:KEY_SIZE]), bytes(raw[KEY_SIZE:]))


@dataclass(frozen=True)
class RecordFile:
    path: Path
    record_count: int

    @property
    def byte_length(self) -> int:
        return self.record_count * RECORD_SIZE

    @classmethod
    def open(cls, path: str | os.PathLike) -> "RecordFile":
        path = Path(path)
        return cls(path, record_count(path))


def record_count(path: str | os.PathLike) -> int:
    size = os.path.getsize(path)
    if size % RECORD_SIZE:
        raise MalformedFileError(
            f"{path}: {size} bytes is not a multiple of {RECORD_SIZE}"
        )
    return size // RECORD_SIZE


def compare_keys(a: Record | bytes, b: Record | bytes) -> int:
    """Byte-lexicographic comparison of keys: -1, 0 or 1. Payloads are ignored."""
    ka = a.key if isinstance(a, Record) else bytes(a[:KEY_SIZE])
    kb = b.key if isinstance(b, Record) else bytes(b[:KEY_SIZE])
    return (ka > kb) - (ka < kb)


def as_records(buf: bytes | bytearray | memoryview | np.ndarray) -> np.ndarray:
    """View a byte buffer as an ``(n, 100)`` uint8 array without copying."""
    arr = np.frombuffer(buf, dtype=np.uint8) if not isinstance(buf, np.ndarray) else buf
    if arr.size % RECORD_SIZE:
        raise MalformedFileError(f"buffer of {arr.size} bytes is not whole records")
    return arr.reshape(-1, RECORD_SIZE)


def key_words(records: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split each 10-byte key into a big-endian (uint64, uint16) pair.

    Comparing the pairs lexicographically is exactly byte order on the keys,
    which lets numpy and numba kernels compare full keys without Python bytes.
    """
    keys = np.ascontiguousarray(records[:, :KEY_SIZE])
    hi = keys[:, :8].copy().view(">u8").ravel().astype(np.uint64)
    lo = keys[:, 8:].copy().view(">u2").ravel().astype(np.uint16)
    return hi, lo


def record_hash(record: Record | bytes) -> int:
    """FNV-1a 64 over all 100 bytes of one record."""
    raw = record.to_bytes() if isinstance(record, Record) else bytes(record)
    h = FNV_OFFSET
    for b in raw:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def record_hashes(records: np.ndarray) -> np.ndarray:
    """Vectorised :func:`record_hash` over an ``(n, 100)`` array."""
    h = np.full(len(records), FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    for col in range(RECORD_SIZE):
        h ^= records[:, col]
        h *= prime
    return h


def checksum_of(records: np.ndarray) -> int:
    return int(record_hashes(records).sum(dtype=np.uint64))


def iter_chunks(
    path: str | os.PathLike, chunk_records: int = SCAN_CHUNK, start: int = 0, count: int | None = None
) -> Iterator[np.ndarray]:
    """Yield consecutive ``(k, 100)`` arrays from a record file."""
    total = record_count(path)
    stop = total if count is None else min(total, start + count)
    with open(path, "rb") as fh:
        fh.seek(start * RECORD_SIZE)
        pos = start
        while pos < stop:
            k = min(chunk_records, stop - pos)
            raw = fh.read(k * RECORD_SIZE)
            if len(raw) != k * RECORD_SIZE:
                raise MalformedFileError(f"{path}: short read at record {pos}")
            yield as_records(raw)
            pos += k


def file_checksum(path: str | os.PathLike) -> int:
    """Sum of record hashes mod 2**64; invariant under record permutation."""
    total = 0
    for chunk in iter_chunks(path):
        total = (total + checksum_of(chunk)) & _MASK64
    return total


def read_records(path: str | os.PathLike) -> np.ndarray:
    record_count(path)
    return as_records(Path(path).read_bytes())


def write_records(path: str | os.PathLike, records: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(records, dtype=np.uint8).tobytes())


def key_order(records: np.ndarray) -> np.ndarray:
    """Stable comparison sort of rows by key; returns the permutation."""
    keys = np.ascontiguousarray(records[:, :KEY_SIZE]).view(f"S{KEY_SIZE}").ravel()
    return np.argsort(keys, kind="stable")
