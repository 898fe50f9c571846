"""Record generator (uniform and skewed) and a streaming output validator.

Randomness comes from splitmix64 used in counter mode: word ``i`` of the
stream for seed ``s`` is ``mix(s + (i + 1) * GAMMA)``. Any index range can
therefore be produced independently, and files are bit-reproducible on every
platform. The files follow the gensort layout and skew scheme but are not
byte-compatible with gensort itself.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .records import (
    KEY_SIZE,
    PRINTABLE_MIN,
    RECORD_SIZE,
    RecordFile,
    checksum_of,
    iter_chunks,
    key_words,
    record_count,
)

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1

SKEW_ENTRIES = 128
SKEW_WIDTH = 6
WORDS_PER_RECORD = 5  # two key characters per word
GEN_CHUNK = 1 << 16

_TABLE_SALT = 0x5EED5EED5EED5EED


def splitmix64(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the splitmix64 stream for ``seed``."""
    i = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + i * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def _printable(words: np.ndarray) -> np.ndarray:
    """Map each 32-bit half of each word to a character in 32..126 (multiply-shift)."""
    halves = np.stack([words >> np.uint64(32), words & np.uint64(0xFFFFFFFF)], axis=-1)
    return ((halves * np.uint64(95)) >> np.uint64(32)).astype(np.uint8) + np.uint8(PRINTABLE_MIN)


def skew_table(seed: int) -> np.ndarray:
    """128 x 6 table of printable prefixes used by skewed generation."""
    words = splitmix64(seed ^ _TABLE_SALT, 0, SKEW_ENTRIES * SKEW_WIDTH // 2)
    return _printable(words).reshape(SKEW_ENTRIES, SKEW_WIDTH)


def skew_index(rec_idx: np.ndarray | int) -> np.ndarray | int:
    """``floor(log2(rec_idx)) mod 128`` for 1-based record indices."""
    if isinstance(rec_idx, (int, np.integer)):
        if rec_idx < 1:
            raise ValueError("record indices are 1-based")
        return (int(rec_idx).bit_length() - 1) % SKEW_ENTRIES
    pow2 = np.uint64(1) << np.arange(64, dtype=np.uint64)
    return (np.searchsorted(pow2, rec_idx, side="right") - 1) % SKEW_ENTRIES


_HEX = np.frombuffer(b"0123456789ABCDEF", dtype=np.uint8)


def _hex_columns(values: np.ndarray) -> np.ndarray:
    shifts = np.arange(60, -4, -4, dtype=np.uint64)
    return _HEX[(values[:, None] >> shifts) & np.uint64(0xF)]


def make_records(start: int, count: int, seed: int, skew: bool = False, table: np.ndarray | None = None) -> np.ndarray:
    """Records ``start .. start+count-1`` (0-based) of the dataset for ``seed``."""
    words = splitmix64(seed, start * WORDS_PER_RECORD, count * WORDS_PER_RECORD)
    recs = np.empty((count, RECORD_SIZE), dtype=np.uint8)
    recs[:, :KEY_SIZE] = _printable(words.reshape(count, WORDS_PER_RECORD)).reshape(count, KEY_SIZE)

    index = np.arange(start, start + count, dtype=np.uint64)
    recs[:, KEY_SIZE : KEY_SIZE + 16] = _hex_columns(np.full(count, seed & _MASK64, dtype=np.uint64))
    recs[:, KEY_SIZE + 16 : KEY_SIZE + 32] = _hex_columns(index)
    filler = (index % np.uint64(26)).astype(np.uint8) + np.uint8(ord("A"))
    recs[:, KEY_SIZE + 32 :] = filler[:, None]

    if skew:
        if table is None:
            table = skew_table(seed)
        recs[:, :SKEW_WIDTH] = table[skew_index(index + np.uint64(1))]
    return recs


def generate(count: int, seed: int, skew: bool, out: str | os.PathLike) -> RecordFile:
    if count < 0:
        raise ValueError("record count must be >= 0")
    table = skew_table(seed) if skew else None
    with open(out, "wb") as fh:
        for start in range(0, count, GEN_CHUNK):
            k = min(GEN_CHUNK, count - start)
            fh.write(make_records(start, k, seed, skew, table).tobytes())
    return RecordFile(Path(out), count)


@dataclass
class ValidationReport:
    sorted: bool
    first_violation_index: int | None
    checksum: int
    record_count: int

    def summary(self) -> str:
        state = "sorted" if self.sorted else f"NOT sorted (first violation at record {self.first_violation_index})"
        return f"records={self.record_count} checksum={self.checksum:016x} {state}"


def validate(path: str | os.PathLike) -> ValidationReport:
    """Stream the file once, checking non-decreasing keys and summing hashes."""
    n = record_count(path)
    checksum = 0
    first_bad: int | None = None
    prev: tuple[int, int] | None = None
    pos = 0
    for chunk in iter_chunks(path):
        checksum = (checksum + checksum_of(chunk)) & _MASK64
        if first_bad is None:
            hi, lo = key_words(chunk)
            if prev is not None:
                hi = np.concatenate((np.array([prev[0]], dtype=np.uint64), hi))
                lo = np.concatenate((np.array([prev[1]], dtype=np.uint16), lo))
                base = pos - 1
            else:
                base = pos
            down = (hi[1:] < hi[:-1]) | ((hi[1:] == hi[:-1]) & (lo[1:] < lo[:-1]))
            bad = np.flatnonzero(down)
            if len(bad):
                first_bad = base + int(bad[0]) + 1
            prev = (int(hi[-1]), int(lo[-1]))
        pos += len(chunk)
    return ValidationReport(first_bad is None, first_bad, checksum, n)
