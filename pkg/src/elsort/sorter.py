"""Partition-and-concatenate external sort driver.

Phases, in order: create the sized output file, train the CDF model on a
key sample, scatter the input into fragment files with ``r`` readers, then
let up to ``s`` sorters gather, sort, and write each partition at its offset.
"""

from __future__ import annotations

import logging
import os
import shutil
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import MIN_SAMPLE, RunConfig
from .errors import InvariantViolation
from .instrument import ELSAR_PHASES, Counters, RunReport
from .internal_sort import learned_sort
from .model import CdfModel, PartitionPlan, draw_sample, train
from .output import (
    CoalesceBuffer,
    MemoryGate,
    PartitionCounter,
    compute_wave,
    create_sparse_output,
    gather_partition,
    write_partition,
)
from .partition import FragmentMatrix, partition_phase, scan_fragments
from .records import RECORD_SIZE, record_count

log = logging.getLogger(__name__)


def train_model(config: RunConfig, counters: Counters) -> CdfModel:
    with counters.timed("train"):
        sample = draw_sample(
            config.input,
            config.sample_rate,
            config.sample_cap,
            config.seed,
            batch_records=config.batch_records,
            scope=config.sample_scope,
            floor=MIN_SAMPLE,
        )
        counters.read["train"] += sample.bytes_read
        keys = sample.keys if len(sample) >= 2 else np.repeat(sample.keys, 2)
        return train(keys, config.leaves)


def _sorter(
    fragments: FragmentMatrix,
    model: CdfModel,
    plan: PartitionPlan,
    output: Path,
    gate: MemoryGate,
    ticket: PartitionCounter,
    coalesce_bytes: int,
) -> Counters:
    counters = Counters()
    coalesce = CoalesceBuffer(coalesce_bytes)
    fd = os.open(output, os.O_WRONLY)
    try:
        while (j := ticket.take()) is not None:
            want = int(plan.sizes[j])
            if want == 0:
                continue
            nbytes = want * RECORD_SIZE
            gate.acquire(nbytes)
            try:
                with counters.timed("gather"):
                    buf = gather_partition(j, fragments, counters)
                if len(buf) != want:
                    raise InvariantViolation(f"partition {j}: gathered {len(buf)} records, counted {want}")
                buf.capacity = want
                with counters.timed("sort"):
                    learned_sort(buf, model, j, plan.f)
                write_partition(j, buf, plan, fd, coalesce, counters)
                del buf
            finally:
                gate.release(nbytes)
    finally:
        os.close(fd)
    return counters


def _collect_quarantine(fragments: FragmentMatrix, output: Path) -> Path | None:
    parts = [fragments.quarantine_path(i) for i in range(fragments.r)]
    parts = [p for p in parts if p.exists()]
    if not parts:
        return None
    dest = output.with_name(output.name + ".quarantine")
    with open(dest, "wb") as out:
        for p in parts:
            with open(p, "rb") as fh:
                shutil.copyfileobj(fh, out)
            p.unlink()
    return dest


def elsar_sort(config: RunConfig) -> RunReport:
    """Sort ``config.input`` into ``config.output``; returns the instrumented report."""
    config.check()
    t0 = time.perf_counter()
    n = record_count(config.input)
    create_sparse_output(config.output, n * RECORD_SIZE)
    counters = Counters()
    report_kw = dict(seed=config.seed, memory_budget=config.memory, partitions=config.partitions)
    if n == 0:
        report = RunReport.from_counters("elsar", 0, counters, ELSAR_PHASES, **report_kw)
        report.wall_seconds = time.perf_counter() - t0
        return report

    model = train_model(config, counters)
    f = config.partitions
    config.temp_dir.mkdir(parents=True, exist_ok=True)
    workdir = Path(tempfile.mkdtemp(prefix="elsort-", dir=config.temp_dir))
    readers = min(config.readers, n)
    fragments = FragmentMatrix(
        readers,
        f,
        workdir,
        watermark=config.flush_watermark,
        descriptor_budget=config.descriptor_budget,
    )
    try:
        counters.merge(partition_phase(config.input, n, model, fragments, config.batch_records))
        if config.debug:
            scan_fragments(fragments)

        quarantined = int(fragments.quarantined.sum())
        if quarantined:
            dest = _collect_quarantine(fragments, config.output)
            log.warning("%d records with non-printable keys moved to %s", quarantined, dest)
            os.truncate(config.output, (n - quarantined) * RECORD_SIZE)

        sizes = fragments.sizes
        plan = PartitionPlan(f, readers, sizes)
        if plan.total + quarantined != n:
            raise InvariantViolation(f"partitioned {plan.total} + {quarantined} quarantined of {n} records")

        wave = compute_wave(sizes, config.memory, config.max_sorters)
        gate = MemoryGate(config.memory)
        ticket = PartitionCounter(f)
        with ThreadPoolExecutor(max_workers=wave.sorters, thread_name_prefix="sorter") as pool:
            futures = [
                pool.submit(_sorter, fragments, model, plan, config.output, gate, ticket, config.coalesce_bytes)
                for _ in range(wave.sorters)
            ]
            for fut in futures:
                counters.merge(fut.result())
    finally:
        fragments.cleanup()
        shutil.rmtree(workdir, ignore_errors=True)

    radix = fragments.radix_counts.sum(axis=0) if fragments.radix_counts is not None else None
    mean = float(sizes.mean())
    report = RunReport.from_counters(
        "elsar",
        n,
        counters,
        ELSAR_PHASES,
        part_mean=mean,
        part_stddev=float(sizes.std()),
        part_max=int(sizes.max()),
        radix_stddev_over_mean=float(radix.std() / radix.mean()) if radix is not None and radix.mean() > 0 else None,
        readers=readers,
        sorters=wave.sorters,
        peak_resident_bytes=gate.peak,
        quarantined=quarantined,
        sample_size=model.sample_size,
        **report_kw,
    )
    report.wall_seconds = time.perf_counter() - t0
    return report
