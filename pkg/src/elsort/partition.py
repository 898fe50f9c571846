"""Parallel batched reading and model-driven scatter into fragment files.

Reader ``i`` owns row ``i`` of an ``r x f`` grid of fragments: in-memory
buffers that collect references to records predicted to fall in partition
``j``, and the temporary file ``frag_<i>_<j>`` they are flushed to. Rows are
disjoint, so readers never coordinate; per-reader partition counters are
summed once after every reader has finished.
"""

from __future__ import annotations

import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoding import encode_keys, printable_mask
from .errors import InvariantViolation, MalformedFileError
from .instrument import Counters
from .model import CdfModel, radix_partitions, radix_thresholds
from .records import RECORD_SIZE, as_records


@dataclass(frozen=True)
class ReadAssignment:
    worker: int
    start: int  # first record
    quota: int  # records

    @property
    def offset(self) -> int:
        return self.start * RECORD_SIZE


def plan_reads(n: int, r: int) -> list[ReadAssignment]:
    """Split ``n`` records into ``r`` contiguous ranges; the last takes the remainder."""
    if r < 1:
        raise ValueError("need at least one reader")
    r = max(1, min(r, n))
    base = n // r
    out = []
    for i in range(r):
        quota = base if i < r - 1 else n - base * (r - 1)
        out.append(ReadAssignment(i, i * base, quota))
    return out


def fragment_name(worker: int, partition: int) -> str:
    return f"frag_{worker}_{partition}"


class FragmentMatrix:
    """Fragment buffers, fragment files and counters for ``r`` readers."""

    def __init__(
        self,
        r: int,
        f: int,
        directory: str | os.PathLike,
        *,
        watermark: int = 64 * 1024,
        descriptor_budget: int = 512,
        radix: bool = True,
    ) -> None:
        self.r = r
        self.f = f
        self.dir = Path(directory)
        self.watermark = watermark
        self.fd_budget = max(1, descriptor_budget // r)
        # pending[i][j]: list of (batch, row indices) references, materialised at flush
        self.pending: list[dict[int, list[tuple[np.ndarray, np.ndarray]]]] = [{} for _ in range(r)]
        self.pending_bytes = np.zeros((r, f), dtype=np.int64)
        self.counts = np.zeros((r, f), dtype=np.int64)
        self.file_records = np.zeros((r, f), dtype=np.int64)
        self.radix_counts = np.zeros((r, f), dtype=np.int64) if radix else None
        self._radix_edges = radix_thresholds(f) if radix else None
        self.quarantined = np.zeros(r, dtype=np.int64)
        self._fds: list[OrderedDict[int, int]] = [OrderedDict() for _ in range(r)]

    def path(self, worker: int, partition: int) -> Path:
        return self.dir / fragment_name(worker, partition)

    def quarantine_path(self, worker: int) -> Path:
        return self.dir / f"quarantine_{worker}"

    @property
    def sizes(self) -> np.ndarray:
        """Per-partition record counts (the S vector), merged over readers."""
        return self.counts.sum(axis=0)

    def _fd(self, worker: int, partition: int) -> int:
        cache = self._fds[worker]
        fd = cache.get(partition)
        if fd is not None:
            cache.move_to_end(partition)
            return fd
        if len(cache) >= self.fd_budget:
            _, old = cache.popitem(last=False)
            os.close(old)
        fd = os.open(self.path(worker, partition), os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o600)
        cache[partition] = fd
        return fd

    def close_row(self, worker: int) -> None:
        cache = self._fds[worker]
        while cache:
            os.close(cache.popitem()[1])

    def cleanup(self) -> None:
        for i in range(self.r):
            self.close_row(i)
        for p in self.dir.glob("frag_*"):
            p.unlink(missing_ok=True)
        for p in self.dir.glob("quarantine_*"):
            p.unlink(missing_ok=True)


def scatter_batch(
    batch: np.ndarray,
    model: CdfModel,
    worker: int,
    fragments: FragmentMatrix,
    counters: Counters | None = None,
) -> FragmentMatrix:
    """Route each record of ``batch`` to fragment ``(worker, partition_of(key))``.

    Records are referenced by row index into ``batch`` until flushed. Records
    with non-printable key bytes go to the worker's quarantine file.
    """
    batch = as_records(batch)
    if len(batch) == 0:
        return fragments
    ok = printable_mask(batch)
    if not ok.all():
        bad = batch[~ok]
        with open(fragments.quarantine_path(worker), "ab") as fh:
            fh.write(bad.tobytes())
        if counters is not None:
            counters.written["partition"] += bad.nbytes
        fragments.quarantined[worker] += len(bad)
        batch = batch[ok]
        if len(batch) == 0:
            return fragments

    f = fragments.f
    encoded = encode_keys(batch)
    parts = model.partitions(encoded, f)
    counts = np.bincount(parts, minlength=f)
    fragments.counts[worker] += counts
    if fragments.radix_counts is not None:
        fragments.radix_counts[worker] += np.bincount(radix_partitions(encoded, f, fragments._radix_edges), minlength=f)

    order = np.argsort(parts, kind="stable")
    bounds = np.concatenate(([0], np.cumsum(counts)))
    row = fragments.pending[worker]
    for j in np.flatnonzero(counts):
        row.setdefault(j, []).append((batch, order[bounds[j] : bounds[j + 1]]))
    fragments.pending_bytes[worker] += counts * RECORD_SIZE
    return fragments


def flush_fragments(
    worker: int,
    fragments: FragmentMatrix,
    counters: Counters | None = None,
    *,
    drain: bool = False,
) -> int:
    """Append buffered fragments of ``worker`` to their files; returns bytes written.

    Only fragments at or above the watermark are written unless ``drain``.
    """
    pend = fragments.pending_bytes[worker]
    limit = 1 if drain else fragments.watermark
    written = 0
    row = fragments.pending[worker]
    for j in np.flatnonzero(pend >= limit):
        refs = row.pop(j)
        data = np.concatenate([b[idx] for b, idx in refs]) if len(refs) > 1 else refs[0][0][refs[0][1]]
        raw = data.tobytes()
        fd = fragments._fd(worker, j)
        view = memoryview(raw)
        while view:
            n = os.write(fd, view)
            if n <= 0:
                raise OSError(f"short write to {fragments.path(worker, j)}")
            view = view[n:]
        fragments.file_records[worker, j] += len(data)
        pend[j] = 0
        written += len(raw)
    if counters is not None:
        counters.written["partition"] += written
    if drain:
        fragments.close_row(worker)
    return written


def read_and_scatter(
    path: str | os.PathLike,
    assignment: ReadAssignment,
    model: CdfModel,
    fragments: FragmentMatrix,
    batch_records: int,
) -> Counters:
    """Body of one reader worker."""
    counters = Counters()
    i = assignment.worker
    with counters.timed("partition"), open(path, "rb", buffering=0) as fh:
        fh.seek(assignment.offset)
        left = assignment.quota
        while left > 0:
            k = min(batch_records, left)
            raw = fh.read(k * RECORD_SIZE)
            if len(raw) != k * RECORD_SIZE:
                raise MalformedFileError(f"{path}: short read in reader {i}")
            counters.read["partition"] += len(raw)
            left -= k
            scatter_batch(as_records(raw), model, i, fragments, counters)
            flush_fragments(i, fragments, counters)
        flush_fragments(i, fragments, counters, drain=True)
    return counters


def partition_phase(
    path: str | os.PathLike,
    n: int,
    model: CdfModel,
    fragments: FragmentMatrix,
    batch_records: int,
) -> Counters:
    """Run every reader to completion (the phase barrier) and merge counters."""
    assignments = plan_reads(n, fragments.r)
    total = Counters()
    with ThreadPoolExecutor(max_workers=len(assignments), thread_name_prefix="reader") as pool:
        futures = [pool.submit(read_and_scatter, path, a, model, fragments, batch_records) for a in assignments]
        for fut in futures:
            total.merge(fut.result())
    return total


def scan_fragments(fragments: FragmentMatrix, model_f: int | None = None) -> list[tuple[int, int] | None]:
    """Debug check of the cross-partition ordering invariant.

    Reads every fragment file and returns, per partition, the (min, max)
    encoded key over all its fragments (``None`` for empty partitions).
    Raises :class:`InvariantViolation` if some partition's max encoded key
    exceeds the min encoded key of a later non-empty partition.
    """
    f = model_f or fragments.f
    bounds: list[tuple[int, int] | None] = []
    for j in range(f):
        lo_key = hi_key = None
        for i in range(fragments.r):
            p = fragments.path(i, j)
            if not p.exists():
                continue
            enc = encode_keys(as_records(p.read_bytes()))
            if len(enc) == 0:
                continue
            a, b = int(enc.min()), int(enc.max())
            lo_key = a if lo_key is None else min(lo_key, a)
            hi_key = b if hi_key is None else max(hi_key, b)
        bounds.append(None if lo_key is None else (lo_key, hi_key))
    prev = None
    for j, bnd in enumerate(bounds):
        if bnd is None:
            continue
        if prev is not None and prev[1] > bnd[0]:
            raise InvariantViolation(
                f"partition {prev[0]} max key {prev[1]} exceeds partition {j} min key {bnd[0]}"
            )
        prev = (j, bnd[1])
    return bounds
