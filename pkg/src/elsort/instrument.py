"""Per-phase timing and byte accounting, and the run report they feed.

Workers each own a :class:`Counters`; the orchestrator merges them at phase
barriers, so no counter is ever shared between threads.
"""

from __future__ import annotations

import csv
import io
import json
import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Iterator

ELSAR_PHASES = ("train", "partition", "gather", "sort", "coalesce", "flush")
MERGESORT_PHASES = ("runs", "merge")


class Counters:
    def __init__(self) -> None:
        self.seconds: dict[str, float] = defaultdict(float)
        self.read: dict[str, int] = defaultdict(int)
        self.written: dict[str, int] = defaultdict(int)

    @contextmanager
    def timed(self, phase: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[phase] += time.perf_counter() - t0

    def merge(self, other: "Counters") -> None:
        for src, dst in ((other.seconds, self.seconds), (other.read, self.read), (other.written, self.written)):
            for k, v in src.items():
                dst[k] += v


@dataclass
class RunReport:
    algorithm: str
    records: int
    input_bytes: int
    wall_seconds: float = 0.0
    # summed worker-seconds per phase; intervals are disjoint within a worker
    phase_seconds: dict[str, float] = field(default_factory=dict)
    bytes_read: dict[str, int] = field(default_factory=dict)
    bytes_written: dict[str, int] = field(default_factory=dict)
    partitions: int = 0
    part_mean: float = 0.0
    part_stddev: float = 0.0
    part_max: int = 0
    radix_stddev_over_mean: float | None = None
    readers: int = 0
    sorters: int = 0
    memory_budget: int = 0
    peak_resident_bytes: int = 0
    quarantined: int = 0
    sample_size: int = 0
    runs: int = 0
    merge_passes: int = 0
    seed: int = 0
    skew: bool | None = None
    input_checksum: int | None = None
    output_checksum: int | None = None
    sorted: bool | None = None

    @classmethod
    def from_counters(cls, algorithm: str, records: int, counters: Counters, phases: tuple[str, ...], **kw) -> "RunReport":
        return cls(
            algorithm=algorithm,
            records=records,
            input_bytes=records * 100,
            phase_seconds={p: counters.seconds.get(p, 0.0) for p in phases},
            bytes_read={p: counters.read.get(p, 0) for p in phases},
            bytes_written={p: counters.written.get(p, 0) for p in phases},
            **kw,
        )

    @property
    def total_read(self) -> int:
        return sum(self.bytes_read.values())

    @property
    def total_written(self) -> int:
        return sum(self.bytes_written.values())

    @property
    def io_load(self) -> int:
        return self.total_read + self.total_written

    @property
    def part_stddev_over_mean(self) -> float | None:
        if self.algorithm != "elsar" or self.part_mean == 0:
            return None
        return self.part_stddev / self.part_mean

    @property
    def records_per_sec(self) -> float:
        return self.records / self.wall_seconds if self.wall_seconds > 0 else 0.0

    @property
    def bytes_per_sec(self) -> float:
        return self.input_bytes / self.wall_seconds if self.wall_seconds > 0 else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(
            io_load=self.io_load,
            total_read=self.total_read,
            total_written=self.total_written,
            part_stddev_over_mean=self.part_stddev_over_mean,
            records_per_sec=self.records_per_sec,
            bytes_per_sec=self.bytes_per_sec,
        )
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        flat = {}
        for k, v in self.to_dict().items():
            if isinstance(v, dict):
                for sub, x in v.items():
                    flat[f"{k}.{sub}"] = x
            else:
                flat[k] = v
        out = io.StringIO()
        w = csv.DictWriter(out, fieldnames=list(flat))
        w.writeheader()
        w.writerow(flat)
        return out.getvalue()

    def text(self) -> str:
        lines = [
            f"algorithm        {self.algorithm}",
            f"records          {self.records}",
            f"wall seconds     {self.wall_seconds:.3f}",
            f"rate             {self.bytes_per_sec / 1e6:.1f} MB/s",
        ]
        for p, s in self.phase_seconds.items():
            lines.append(
                f"  {p:<14} {s:8.3f} s  read {self.bytes_read.get(p, 0):>14}  written {self.bytes_written.get(p, 0):>14}"
            )
        lines.append(f"I/O load         {self.io_load} bytes ({self.io_load / max(self.input_bytes, 1):.3f}x input)")
        if self.algorithm == "elsar":
            ratio = self.part_stddev_over_mean
            lines.append(
                f"partitions       {self.partitions}  mean {self.part_mean:.1f}  max {self.part_max}  "
                f"stddev/mean {ratio if ratio is None else round(ratio, 4)}"
            )
            lines.append(f"readers/sorters  {self.readers}/{self.sorters}")
            lines.append(f"peak resident    {self.peak_resident_bytes} of {self.memory_budget} bytes")
            if self.quarantined:
                lines.append(f"quarantined      {self.quarantined}")
        else:
            lines.append(f"runs             {self.runs}  merge passes {self.merge_passes}")
        if self.output_checksum is not None:
            lines.append(f"input checksum   {self.input_checksum:016x}")
            lines.append(f"output checksum  {self.output_checksum:016x}")
            lines.append(f"sorted           {self.sorted}")
        return "\n".join(lines)
