"""In-memory sort of one partition: model placement plus insertion touch-up.

Records never move during sorting. The buffer keeps an ``order`` array of
row indices (the "references") which is permuted instead; the writer
dereferences it when coalescing output.

Placement maps each record to one of ``n`` slots using the global CDF model
rescaled to the partition's slice of ``[0, 1]``. A slot takes at most
``SLOT_CAPACITY`` records; the overflow is comparison-sorted and merged back.
Because the model is monotone, disorder after the merge is confined to
records sharing a slot, which the insertion pass repairs in linear time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .encoding import encode_keys
from .errors import PartitionOverflowError
from .model import CdfModel
from .records import as_records, key_order, key_words

SLOT_CAPACITY = 4


@dataclass
class SortBuffer:
    records: np.ndarray  # (n, 100) uint8, never reordered
    encoded: np.ndarray  # uint64 encodings of the first 9 key bytes
    order: np.ndarray | None = None
    capacity: int | None = None
    spilled: int = 0
    moves: int = 0

    @classmethod
    def from_records(cls, records: np.ndarray, capacity: int | None = None) -> "SortBuffer":
        records = as_records(records)
        return cls(records, encode_keys(records), capacity=capacity)

    def __len__(self) -> int:
        return len(self.records)

    def sorted_records(self) -> np.ndarray:
        order = np.arange(len(self)) if self.order is None else self.order
        return self.records[order]


@numba.njit(cache=True, nogil=True)
def _less(hi, lo, a, b):
    return hi[a] < hi[b] or (hi[a] == hi[b] and lo[a] < lo[b])


@numba.njit(cache=True, nogil=True)
def _place(slot, n_slots, cap):
    counts = np.zeros(n_slots, dtype=np.int64)
    for i in range(slot.shape[0]):
        counts[slot[i]] += 1
    starts = np.empty(n_slots, dtype=np.int64)
    total = 0
    for s in range(n_slots):
        starts[s] = total
        total += min(counts[s], cap)
    placed = np.empty(total, dtype=np.int64)
    spill = np.empty(slot.shape[0] - total, dtype=np.int64)
    fill = np.zeros(n_slots, dtype=np.int64)
    ns = 0
    for i in range(slot.shape[0]):
        s = slot[i]
        if fill[s] < cap:
            placed[starts[s] + fill[s]] = i
            fill[s] += 1
        else:
            spill[ns] = i
            ns += 1
    return placed, spill


@numba.njit(cache=True, nogil=True)
def _merge(a, b, hi, lo):
    out = np.empty(a.shape[0] + b.shape[0], dtype=np.int64)
    i = 0
    j = 0
    k = 0
    while i < a.shape[0] and j < b.shape[0]:
        if _less(hi, lo, b[j], a[i]):
            out[k] = b[j]
            j += 1
        else:
            out[k] = a[i]
            i += 1
        k += 1
    while i < a.shape[0]:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.shape[0]:
        out[k] = b[j]
        j += 1
        k += 1
    return out


@numba.njit(cache=True, nogil=True)
def _insertion(order, hi, lo):
    moves = 0
    for i in range(1, order.shape[0]):
        cur = order[i]
        j = i - 1
        while j >= 0 and _less(hi, lo, cur, order[j]):
            order[j + 1] = order[j]
            j -= 1
            moves += 1
        order[j + 1] = cur
    return moves


def touch_up(records: np.ndarray, order: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Insertion sort of ``order`` by full 10-byte key; stable.

    Returns the sorted index array and the number of element shifts, which
    equals the total displacement of the input.
    """
    records = as_records(records)
    order = np.arange(len(records), dtype=np.int64) if order is None else np.array(order, dtype=np.int64)
    hi, lo = key_words(records)
    moves = _insertion(order, hi, lo)
    return order, int(moves)


def placement_slots(encoded: np.ndarray, model: CdfModel, partition: int, f: int) -> np.ndarray:
    n = len(encoded)
    local = (model.predict_many(encoded) - partition / f) * f * n
    return np.clip(np.floor(local), 0, n - 1).astype(np.int64)


def learned_sort(buffer: SortBuffer, model: CdfModel, partition: int = 0, f: int = 1) -> SortBuffer:
    """Sort ``buffer`` in place (via its ``order``) and return it."""
    n = len(buffer)
    if buffer.capacity is not None and n > buffer.capacity:
        raise PartitionOverflowError(
            f"partition {partition} holds {n} records, buffer capacity is {buffer.capacity}"
        )
    if n < 2:
        buffer.order = np.arange(n, dtype=np.int64)
        return buffer

    slot = placement_slots(buffer.encoded, model, partition, f)
    placed, spill = _place(slot, n, SLOT_CAPACITY)
    hi, lo = key_words(buffer.records)
    if len(spill):
        spill = spill[key_order(buffer.records[spill])]
        order = _merge(placed, spill, hi, lo)
    else:
        order = placed
    buffer.moves = int(_insertion(order, hi, lo))
    buffer.spilled = len(spill)
    buffer.order = order
    return buffer
