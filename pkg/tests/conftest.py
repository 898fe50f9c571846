from __future__ import annotations

import random
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import random_record  # noqa: E402


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def write_file(tmp_path):
    counter = iter(range(10**6))

    def _write(records: list[bytes] | bytes | np.ndarray, name: str | None = None) -> Path:
        path = tmp_path / (name or f"f{next(counter)}.dat")
        if isinstance(records, np.ndarray):
            data = records.tobytes()
        elif isinstance(records, (bytes, bytearray)):
            data = bytes(records)
        else:
            data = b"".join(records)
        path.write_bytes(data)
        return path

    return _write


@pytest.fixture
def random_file(write_file, rng):
    def _make(n: int) -> Path:
        return write_file([random_record(rng) for _ in range(n)])

    return _make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
