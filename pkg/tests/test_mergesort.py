from __future__ import annotations

import importlib
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elsort.config import RunConfig
from elsort.datagen import generate, validate
from elsort.instrument import Counters
from elsort.mergesort import Run, create_runs, merge_runs, mergesort
from elsort.records import as_records, file_checksum

from helpers import key_stream, random_record

key_st = st.binary(min_size=10, max_size=10).map(lambda b: bytes(65 + x % 4 for x in b))


def write_run(path, keys, tag=0):
    path.write_bytes(b"".join(k + bytes([tag]) + bytes(89) for k in keys))
    return Run(path, len(keys))


def test_runs_of_four_four_two(tmp_path, random_file):
    src = random_file(10)
    work = tmp_path / "w"
    work.mkdir()
    runs = create_runs(src, memory=400, workers=1, tmpdir=work)
    assert [r.records for r in runs] == [4, 4, 2]
    for r in runs:
        ks = key_stream(r.path.read_bytes())
        assert ks == sorted(ks)


def test_input_within_memory_is_one_run(tmp_path, random_file):
    src = random_file(50)
    work = tmp_path / "w"
    work.mkdir()
    c = Counters()
    runs = create_runs(src, memory=10**6, workers=1, tmpdir=work, counters=c)
    assert len(runs) == 1
    assert sorted(src.read_bytes()[i : i + 100] for i in range(0, 5000, 100)) == sorted(
        runs[0].path.read_bytes()[i : i + 100] for i in range(0, 5000, 100)
    )
    assert c.read["runs"] == c.written["runs"] == 5000


def test_workers_shrink_runs(tmp_path, random_file):
    src = random_file(12)
    work = tmp_path / "w"
    work.mkdir()
    runs = create_runs(src, memory=1200, workers=3, tmpdir=work)
    assert [r.records for r in runs] == [4, 4, 4]


def test_textbook_merge(tmp_path):
    a = write_run(tmp_path / "a", [b"1" * 10, b"3" * 10])
    b = write_run(tmp_path / "b", [b"2" * 10, b"4" * 10])
    merge_runs([a, b], tmp_path / "out")
    assert key_stream((tmp_path / "out").read_bytes()) == [b"1" * 10, b"2" * 10, b"3" * 10, b"4" * 10]


def test_single_run_is_copied(tmp_path, rng):
    raw = b"".join(sorted(random_record(rng) for _ in range(30)))
    (tmp_path / "r").write_bytes(raw)
    merge_runs([Run(tmp_path / "r", 30)], tmp_path / "out")
    assert (tmp_path / "out").read_bytes() == raw


def test_ties_favour_lower_run(tmp_path):
    a = write_run(tmp_path / "a", [b"K" * 10] * 3, tag=0)
    b = write_run(tmp_path / "b", [b"K" * 10] * 3, tag=1)
    merge_runs([b, a], tmp_path / "out")
    tags = [r[10] for r in as_records((tmp_path / "out").read_bytes())]
    assert tags == [1, 1, 1, 0, 0, 0]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(key_st, max_size=40), min_size=1, max_size=9), st.sampled_from([None, 2, 3]))
def test_merge_matches_oracle(tmp_path_factory, runs_keys, fan_in):
    d = tmp_path_factory.mktemp("m")
    runs = [write_run(d / f"r{i}", sorted(ks)) for i, ks in enumerate(runs_keys)]
    c = Counters()
    passes = merge_runs(runs, d / "out", c, fan_in=fan_in, tmpdir=d)
    expected = sorted(k for ks in runs_keys for k in ks)
    assert key_stream((d / "out").read_bytes()) == expected
    total = sum(len(ks) for ks in runs_keys) * 100
    assert c.written["merge"] >= total
    if fan_in is None or len(runs_keys) <= fan_in:
        assert passes == 1
        assert c.read["merge"] == c.written["merge"] == total


def test_multipass_merge_reads_more(tmp_path, rng):
    runs = []
    for i in range(10):
        runs.append(write_run(tmp_path / f"r{i}", sorted(random_record(rng)[:10] for _ in range(20))))
    c = Counters()
    passes = merge_runs(runs, tmp_path / "out", c, fan_in=3, tmpdir=tmp_path)
    assert passes > 1
    assert c.read["merge"] > 200 * 100


def test_merge_across_read_blocks(tmp_path, monkeypatch):
    ms = importlib.import_module("elsort.mergesort")

    monkeypatch.setattr(ms, "READ_BLOCK", 7)
    monkeypatch.setattr(ms, "WRITE_BLOCK", 5)
    rng = np.random.default_rng(0)
    all_keys = []
    runs = []
    for i in range(4):
        ks = sorted(bytes(rng.integers(65, 70, 10, dtype=np.uint8)) for _ in range(53))
        all_keys += ks
        runs.append(write_run(tmp_path / f"r{i}", ks))
    merge_runs(runs, tmp_path / "out")
    assert key_stream((tmp_path / "out").read_bytes()) == sorted(all_keys)


@pytest.mark.parametrize("skew", [False, True])
def test_mergesort_end_to_end(tmp_path, skew):
    src = generate(20_000, 4, skew, tmp_path / "in").path
    cfg = RunConfig(src, tmp_path / "out", algorithm="mergesort", memory=300_000, readers=2, temp_dir=tmp_path / "t", fan_in=4)
    rep = mergesort(cfg)
    check = validate(tmp_path / "out")
    assert check.sorted
    assert check.checksum == file_checksum(src)
    assert rep.runs == 14
    assert rep.merge_passes > 1
    assert rep.io_load > 4 * rep.input_bytes
    assert not list((tmp_path / "t").iterdir())
