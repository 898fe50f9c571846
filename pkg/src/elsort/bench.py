"""Benchmark sweep: sizes x skew x algorithm, one CSV row per run."""

from __future__ import annotations

import csv
import dataclasses
import itertools
import logging
import os
from pathlib import Path
from typing import Iterable, Sequence

from .config import RunConfig
from .datagen import generate
from .run import run_sort

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "algorithm",
    "records",
    "skew",
    "seconds",
    "bytes_read",
    "bytes_written",
    "part_stddev_over_mean",
    "checksum",
)


def sweep(
    sizes: Sequence[int],
    skews: Sequence[bool],
    algorithms: Sequence[str],
    workdir: str | os.PathLike,
    *,
    seed: int = 0,
    template: RunConfig | None = None,
    keep_files: bool = False,
) -> Iterable[tuple[dict, object]]:
    """Yield ``(row, report)`` per run. Inputs are generated once per (size, skew)."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    for records, skew in itertools.product(sizes, skews):
        src = workdir / f"input_{records}_{'skew' if skew else 'uniform'}_{seed}.dat"
        generate(records, seed, skew, src)
        for algo in algorithms:
            dst = workdir / f"output_{records}_{int(skew)}_{algo}.dat"
            base = template if template is not None else RunConfig(src, dst)
            cfg = dataclasses.replace(base, input=src, output=dst, algorithm=algo, seed=seed)
            report = run_sort(cfg, verify=True)
            report.skew = skew
            ratio = report.part_stddev_over_mean
            row = {
                "algorithm": algo,
                "records": records,
                "skew": int(skew),
                "seconds": f"{report.wall_seconds:.6f}",
                "bytes_read": report.total_read,
                "bytes_written": report.total_written,
                "part_stddev_over_mean": "" if ratio is None else f"{ratio:.6f}",
                "checksum": f"{report.output_checksum:016x}",
            }
            log.info("%s", row)
            yield row, report
            if not keep_files:
                dst.unlink(missing_ok=True)
        if not keep_files:
            src.unlink(missing_ok=True)


def write_csv(rows: Iterable[dict], path: str | os.PathLike) -> list[dict]:
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return rows


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
