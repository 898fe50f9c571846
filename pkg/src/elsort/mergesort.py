"""External mergesort baseline: sorted runs, then heap-based k-way merging.

Runs are cut from the input in memory-sized pieces, comparison-sorted and
spilled to temporary files. Merging keeps a min-heap of run heads keyed by
``(key, run index)``. When there are more runs than ``fan_in`` the oldest
``fan_in`` runs are merged into a new run first, like GNU sort does, so the
merge can take several passes over the data.
"""

from __future__ import annotations

import heapq
import os
import shutil
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .instrument import MERGESORT_PHASES, Counters, RunReport
from .records import KEY_SIZE, RECORD_SIZE, as_records, key_order, record_count

READ_BLOCK = 1 << 14  # records buffered per run while merging
WRITE_BLOCK = 1 << 14


@dataclass
class Run:
    path: Path
    records: int


def _make_run(src: Path, start: int, count: int, dest: Path) -> tuple[Run, Counters]:
    counters = Counters()
    with counters.timed("runs"):
        with open(src, "rb") as fh:
            fh.seek(start * RECORD_SIZE)
            raw = fh.read(count * RECORD_SIZE)
        counters.read["runs"] += len(raw)
        recs = as_records(raw)
        out = recs[key_order(recs)]
        with open(dest, "wb") as fh:
            fh.write(out.tobytes())
        counters.written["runs"] += out.nbytes
    return Run(dest, count), counters


def create_runs(
    src: str | os.PathLike,
    memory: int,
    workers: int,
    tmpdir: str | os.PathLike,
    counters: Counters | None = None,
) -> list[Run]:
    """Cut the input into runs of at most ``memory / workers`` bytes and sort each."""
    src = Path(src)
    n = record_count(src)
    per_run = max(1, memory // max(1, workers) // RECORD_SIZE)
    starts = list(range(0, n, per_run))
    tmpdir = Path(tmpdir)
    with ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix="run") as pool:
        futures = [
            pool.submit(_make_run, src, s, min(per_run, n - s), tmpdir / f"run_{k}")
            for k, s in enumerate(starts)
        ]
        done = [fut.result() for fut in futures]
    if counters is not None:
        for _, c in done:
            counters.merge(c)
    return [run for run, _ in done]


class _Cursor:
    """Buffered reader over one run exposing the current block's keys."""

    def __init__(self, run: Run, counters: Counters) -> None:
        self.fh = open(run.path, "rb")
        self.counters = counters
        self.block = np.empty((0, RECORD_SIZE), dtype=np.uint8)
        self.keys = np.empty(0, dtype=f"S{KEY_SIZE}")
        self.pos = 0
        self.refill()

    def refill(self) -> bool:
        raw = self.fh.read(READ_BLOCK * RECORD_SIZE)
        self.counters.read["merge"] += len(raw)
        self.block = as_records(raw)
        self.keys = np.ascontiguousarray(self.block[:, :KEY_SIZE]).view(f"S{KEY_SIZE}").ravel()
        self.pos = 0
        return len(self.block) > 0

    def head(self) -> bytes:
        return bytes(self.block[self.pos, :KEY_SIZE])

    def close(self) -> None:
        self.fh.close()


def _merge_into(runs: list[Run], dest_fd, counters: Counters) -> int:
    """k-way merge of ``runs`` into an open binary file; returns records written.

    Pops the smallest head and copies every record of that run that still
    sorts before the next-smallest head, so long ordered stretches move as
    one block.
    """
    cursors = [_Cursor(r, counters) for r in runs]
    heap = [(c.head(), i) for i, c in enumerate(cursors) if len(c.block)]
    heapq.heapify(heap)
    pending: list[np.ndarray] = []
    pending_n = 0
    written = 0
    try:
        while heap:
            _, i = heapq.heappop(heap)
            cur = cursors[i]
            if heap:
                nxt_key, nxt_i = heap[0]
                # ties go to the lower run index
                side = "right" if i < nxt_i else "left"
                stop = cur.pos + int(np.searchsorted(cur.keys[cur.pos :], nxt_key, side=side))
                stop = max(stop, cur.pos + 1)
            else:
                stop = len(cur.block)
            pending.append(cur.block[cur.pos : stop])
            pending_n += stop - cur.pos
            cur.pos = stop
            if pending_n >= WRITE_BLOCK:
                written += _drain(pending, dest_fd, counters)
                pending_n = 0
            if cur.pos >= len(cur.block) and not cur.refill():
                continue
            heapq.heappush(heap, (cur.head(), i))
        written += _drain(pending, dest_fd, counters)
    finally:
        for c in cursors:
            c.close()
    return written


def _drain(pending: list[np.ndarray], fh, counters: Counters) -> int:
    if not pending:
        return 0
    data = np.concatenate(pending)
    pending.clear()
    fh.write(data.tobytes())
    counters.written["merge"] += data.nbytes
    return len(data)


def merge_runs(
    runs: list[Run],
    output: str | os.PathLike,
    counters: Counters | None = None,
    *,
    fan_in: int | None = None,
    tmpdir: str | os.PathLike | None = None,
) -> int:
    """Merge sorted runs into ``output``; returns the number of merge passes.

    ``fan_in=None`` merges everything in one pass.
    """
    counters = counters if counters is not None else Counters()
    runs = list(runs)
    passes = 0
    serial = 0
    workdir = Path(tmpdir) if tmpdir is not None else Path(output).parent
    with counters.timed("merge"):
        while fan_in is not None and len(runs) > fan_in:
            group, runs = runs[:fan_in], runs[fan_in:]
            dest = workdir / f"merged_{serial}"
            serial += 1
            with open(dest, "wb") as fh:
                n = _merge_into(group, fh, counters)
            for r in group:
                r.path.unlink(missing_ok=True)
            runs.append(Run(dest, n))
            passes += 1
        with open(output, "wb") as fh:
            _merge_into(runs, fh, counters)
        passes += 1
    return passes


def mergesort(config: RunConfig) -> RunReport:
    config.check()
    t0 = time.perf_counter()
    n = record_count(config.input)
    counters = Counters()
    config.temp_dir.mkdir(parents=True, exist_ok=True)
    workdir = Path(tempfile.mkdtemp(prefix="elsort-ms-", dir=config.temp_dir))
    workers = config.max_sorters
    try:
        runs = create_runs(config.input, config.memory, workers, workdir, counters)
        passes = merge_runs(runs, config.output, counters, fan_in=config.fan_in, tmpdir=workdir)
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    report = RunReport.from_counters(
        "mergesort",
        n,
        counters,
        MERGESORT_PHASES,
        runs=len(runs),
        merge_passes=passes,
        memory_budget=config.memory,
        sorters=workers,
        seed=config.seed,
    )
    report.wall_seconds = time.perf_counter() - t0
    return report
