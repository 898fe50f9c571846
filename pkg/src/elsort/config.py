from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .model import DEFAULT_LEAVES, DEFAULT_SAMPLE_CAP, DEFAULT_SAMPLE_RATE
from .records import RECORD_SIZE

TMPDIR_ENV = "ELSORT_TMPDIR"

DEFAULT_PARTITIONS = 1000
DEFAULT_BATCH_RECORDS = 10_486  # ~1 MiB
DEFAULT_COALESCE_BYTES = 100 * 1024
DEFAULT_FLUSH_WATERMARK = 64 * 1024
DEFAULT_DESCRIPTOR_BUDGET = 512
DEFAULT_FAN_IN = 16
# the training pool never shrinks below this many records on tiny inputs
MIN_SAMPLE = 1000


def physical_memory() -> int:
    return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")


def default_temp_dir() -> str:
    return os.environ.get(TMPDIR_ENV) or tempfile.gettempdir()


@dataclass
class RunConfig:
    input: Path
    output: Path
    algorithm: str = "elsar"
    partitions: int = DEFAULT_PARTITIONS
    readers: int = field(default_factory=lambda: os.cpu_count() or 1)
    sorters: int | None = None  # cap on concurrent sorters; defaults to readers
    memory: int = field(default_factory=lambda: physical_memory() // 2)
    batch_bytes: int = DEFAULT_BATCH_RECORDS * RECORD_SIZE
    temp_dir: Path = field(default_factory=lambda: Path(default_temp_dir()))
    seed: int = 0
    sample_rate: float = DEFAULT_SAMPLE_RATE
    sample_cap: int = DEFAULT_SAMPLE_CAP
    sample_scope: str = "file"
    leaves: int = DEFAULT_LEAVES
    coalesce_bytes: int = DEFAULT_COALESCE_BYTES
    flush_watermark: int = DEFAULT_FLUSH_WATERMARK
    descriptor_budget: int = DEFAULT_DESCRIPTOR_BUDGET
    fan_in: int = DEFAULT_FAN_IN
    debug: bool = False

    def __post_init__(self) -> None:
        self.input = Path(self.input)
        self.output = Path(self.output)
        self.temp_dir = Path(self.temp_dir)

    @property
    def batch_records(self) -> int:
        return max(1, self.batch_bytes // RECORD_SIZE)

    @property
    def max_sorters(self) -> int:
        return self.sorters if self.sorters is not None else self.readers

    def check(self) -> "RunConfig":
        problems = []
        if self.algorithm not in ("elsar", "mergesort"):
            problems.append(f"unknown algorithm {self.algorithm!r}")
        if self.partitions < 1:
            problems.append("partitions must be >= 1")
        if self.readers < 1:
            problems.append("readers must be >= 1")
        if self.sorters is not None and self.sorters < 1:
            problems.append("sorters must be >= 1")
        if self.memory < RECORD_SIZE:
            problems.append(f"memory budget must be >= {RECORD_SIZE} bytes")
        if self.batch_bytes < RECORD_SIZE:
            problems.append("batch must hold at least one record")
        if not 0 < self.sample_rate <= 1:
            problems.append("sample rate must be in (0, 1]")
        if self.sample_scope not in ("batch", "file"):
            problems.append("sample scope must be 'batch' or 'file'")
        if self.leaves < 1:
            problems.append("leaf count must be >= 1")
        if self.coalesce_bytes < RECORD_SIZE:
            problems.append("coalesce buffer must hold at least one record")
        if self.fan_in < 2:
            problems.append("merge fan-in must be >= 2")
        paths = [self.input.resolve(), self.output.resolve(), self.temp_dir.resolve()]
        if len(set(paths)) != len(paths):
            problems.append("input, output and temp dir must be distinct")
        if problems:
            raise ConfigError("; ".join(problems))
        return self
