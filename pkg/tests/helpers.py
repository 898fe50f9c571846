"""Independent oracles used by the test-suite.

Nothing here imports the code under test, so an error in the package cannot
leak into the expected values.
"""

from __future__ import annotations

import random

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) % 2**64
    return h


def checksum(raw: bytes) -> int:
    return sum(fnv1a(raw[i : i + 100]) for i in range(0, len(raw), 100)) % 2**64


def base95(key: bytes, length: int) -> int:
    """Positional base-95 value over the first min(length, 9) characters."""
    width = min(length, 9)
    digits = [(key[i] - 32) if i < len(key) else 0 for i in range(width)]
    value = 0
    for d in digits:
        value = value * 95 + d
    return value


def split_records(raw: bytes) -> list[bytes]:
    return [raw[i : i + 100] for i in range(0, len(raw), 100)]


def key_stream(raw: bytes) -> list[bytes]:
    return [r[:10] for r in split_records(raw)]


def random_key(rng: random.Random, alphabet: bytes | None = None) -> bytes:
    if alphabet is None:
        return bytes(rng.randint(32, 126) for _ in range(10))
    return bytes(rng.choice(alphabet) for _ in range(10))


def random_record(rng: random.Random, key: bytes | None = None) -> bytes:
    key = random_key(rng) if key is None else key
    return key + bytes(rng.randint(0, 255) for _ in range(90))
