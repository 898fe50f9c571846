"""Base-95 numeric embedding of printable ASCII keys.

Each printable character maps to ``code - 32`` in ``[0, 94]`` and the key is
read as a base-95 number over its first (at most) nine characters. Nine is the
most that fits an unsigned 64-bit word: ``95**9 - 1 < 2**63``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import EmptyInputError, NonPrintableKeyError
from .records import KEY_SIZE, PRINTABLE_MAX, PRINTABLE_MIN

BASE = 95
MAX_ENCODED_CHARS = 9
# 95**0 .. 95**8
POW95 = tuple(BASE**i for i in range(MAX_ENCODED_CHARS))
KEY_SPACE = BASE**MAX_ENCODED_CHARS  # number of distinct encodings
MAX_ENCODED = KEY_SPACE - 1


def encode(key: bytes | str, length: int = MAX_ENCODED_CHARS) -> int:
    """Encode ``key`` as a base-95 integer using positional length ``length``.

    Only the first ``min(length, 9)`` positions contribute. Positions past the
    end of a short key contribute zero, the same as a space character.
    """
    if isinstance(key, str):
        key = key.encode("ascii")
    if length < 1:
        raise ValueError(f"effective length must be >= 1, got {length}")
    width = min(length, MAX_ENCODED_CHARS)
    value = 0
    for i in range(width):
        if i < len(key):
            b = key[i]
            if b < PRINTABLE_MIN or b > PRINTABLE_MAX:
                raise NonPrintableKeyError(f"byte {b} at position {i} of {key!r}")
            value += (b - PRINTABLE_MIN) * POW95[width - 1 - i]
    return value


def encode_keys(records: np.ndarray) -> np.ndarray:
    """Vectorised fixed-length encoding of the first 9 key bytes of each record.

    ``records`` is any ``(n, >=9)`` uint8 array. Does not validate bytes; use
    :func:`printable_mask` first when the input is untrusted.
    """
    out = np.zeros(len(records), dtype=np.uint64)
    base = np.uint64(BASE)
    for i in range(MAX_ENCODED_CHARS):
        out *= base
        out += records[:, i] - np.uint8(PRINTABLE_MIN)
    return out


def printable_mask(records: np.ndarray) -> np.ndarray:
    keys = records[:, :KEY_SIZE]
    return np.all((keys >= PRINTABLE_MIN) & (keys <= PRINTABLE_MAX), axis=1)


def max_observed_length(keys: Sequence[bytes | str]) -> int:
    if len(keys) == 0:
        raise EmptyInputError("no keys to measure")
    return max(len(k) for k in keys)


def encode_variable(keys: Sequence[bytes | str]) -> list[int]:
    """Encode variable-length keys on a common positional scale."""
    length = max_observed_length(keys)
    return [encode(k, length) for k in keys]
