"""Sorter wave sizing, partition gathering, and offset-addressed output writes.

Each partition has a fixed byte range in the output, computed from the final
partition sizes, so sorters write independently through their own file
descriptors and the result is simply the partitions laid end to end.
"""

from __future__ import annotations

import errno
import os
import shutil
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, MalformedFileError, OversizedPartitionError
from .instrument import Counters
from .internal_sort import SortBuffer
from .model import PartitionPlan
from .partition import FragmentMatrix
from .records import RECORD_SIZE, RecordFile, as_records


@dataclass(frozen=True)
class SorterWave:
    sorters: int
    partitions: int

    @property
    def partitions_per_sorter(self) -> float:
        return self.partitions / self.sorters


def compute_wave(sizes: np.ndarray, memory: int, workers: int) -> SorterWave:
    """Number of sorters: how many leading partitions fit in ``memory`` together."""
    sizes = np.asarray(sizes, dtype=np.int64)
    f = len(sizes)
    nbytes = sizes * RECORD_SIZE
    if f and nbytes.max() > memory:
        j = int(nbytes.argmax())
        raise OversizedPartitionError(
            f"partition {j} needs {int(nbytes[j])} bytes but the memory budget is {memory}; "
            "increase the partition count"
        )
    fit = int(np.searchsorted(np.cumsum(nbytes), memory, side="right"))
    s = max(1, min(fit, f, workers))
    return SorterWave(s, f)


class MemoryGate:
    """Admits partition buffers while their total stays within the budget."""

    def __init__(self, budget: int) -> None:
        self.budget = budget
        self.in_use = 0
        self.peak = 0
        self._cond = threading.Condition()

    def acquire(self, nbytes: int) -> None:
        if nbytes > self.budget:
            raise OversizedPartitionError(f"{nbytes} bytes exceeds the memory budget {self.budget}")
        with self._cond:
            while self.in_use + nbytes > self.budget:
                self._cond.wait()
            self.in_use += nbytes
            self.peak = max(self.peak, self.in_use)

    def release(self, nbytes: int) -> None:
        with self._cond:
            self.in_use -= nbytes
            self._cond.notify_all()


class PartitionCounter:
    """Shared fetch-and-increment over partition ids."""

    def __init__(self, limit: int) -> None:
        self.limit = limit
        self._next = 0
        self._lock = threading.Lock()

    def take(self) -> int | None:
        with self._lock:
            if self._next >= self.limit:
                return None
            j = self._next
            self._next += 1
            return j


def gather_partition(j: int, fragments: FragmentMatrix, counters: Counters | None = None) -> SortBuffer:
    """Concatenate fragments ``(0..r-1, j)`` into one buffer, deleting each file once read."""
    parts = []
    for i in range(fragments.r):
        p = fragments.path(i, j)
        try:
            raw = p.read_bytes()
        except FileNotFoundError:
            continue
        p.unlink()
        if len(raw) % RECORD_SIZE:
            raise MalformedFileError(f"fragment {p} is {len(raw)} bytes")
        if counters is not None:
            counters.read["gather"] += len(raw)
        parts.append(np.frombuffer(raw, dtype=np.uint8))
    flat = np.concatenate(parts) if parts else np.empty(0, dtype=np.uint8)
    return SortBuffer.from_records(as_records(flat))


class CoalesceBuffer:
    def __init__(self, nbytes: int) -> None:
        self.capacity = max(1, nbytes // RECORD_SIZE)
        self.buf = np.empty((self.capacity, RECORD_SIZE), dtype=np.uint8)


def _pwrite_all(fd: int, data: memoryview, offset: int, retries: int = 3) -> None:
    while data:
        n = os.pwrite(fd, data, offset)
        if n <= 0:
            retries -= 1
            if retries < 0:
                raise OSError(errno.EIO, f"short write at offset {offset}")
            continue
        data = data[n:]
        offset += n


def write_partition(
    j: int,
    buffer: SortBuffer,
    plan: PartitionPlan,
    fd: int,
    coalesce: CoalesceBuffer,
    counters: Counters | None = None,
) -> int:
    """Write sorted partition ``j`` starting at its precomputed byte offset."""
    counters = counters if counters is not None else Counters()
    n = len(buffer)
    start = int(plan.offsets[j])
    end = start + n * RECORD_SIZE
    limit = int(plan.offsets[j + 1]) if j + 1 < plan.f else plan.total * RECORD_SIZE
    if n != plan.sizes[j] or end != limit:
        raise InvariantViolation(f"partition {j}: {n} records do not fill [{start}, {limit})")
    order = buffer.order if buffer.order is not None else np.arange(n)
    cap = coalesce.capacity
    for a in range(0, n, cap):
        b = min(n, a + cap)
        with counters.timed("coalesce"):
            chunk = coalesce.buf[: b - a]
            np.take(buffer.records, order[a:b], axis=0, out=chunk)
        with counters.timed("flush"):
            _pwrite_all(fd, memoryview(chunk).cast("B"), start + a * RECORD_SIZE)
        counters.written["flush"] += chunk.nbytes
    return n * RECORD_SIZE


def create_sparse_output(path: str | os.PathLike, byte_length: int) -> RecordFile:
    """Create (or replace) ``path`` with logical size ``byte_length``."""
    path = Path(path)
    free = shutil.disk_usage(path.parent if str(path.parent) else ".").free
    existing = path.stat().st_size if path.exists() else 0
    if byte_length > free + existing:
        raise OSError(errno.ENOSPC, f"{byte_length} bytes needed for {path}, {free} free")
    with open(path, "wb") as fh:
        fh.truncate(byte_length)
    return RecordFile(path, byte_length // RECORD_SIZE)
