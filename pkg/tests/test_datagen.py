from __future__ import annotations

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elsort.datagen import (
    SKEW_ENTRIES,
    SKEW_WIDTH,
    generate,
    make_records,
    skew_index,
    skew_table,
    splitmix64,
    validate,
)
from elsort.encoding import encode_keys
from elsort.errors import MalformedFileError
from elsort.model import radix_partitions

from helpers import checksum

M64 = 2**64 - 1


def splitmix_ref(seed: int, i: int) -> int:
    z = (seed + (i + 1) * 0x9E3779B97F4A7C15) & M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


@settings(max_examples=50)
@given(st.integers(0, M64), st.integers(0, 10**12), st.integers(1, 20))
def test_splitmix_matches_reference(seed, start, count):
    got = splitmix64(seed, start, count).tolist()
    assert got == [splitmix_ref(seed, start + k) for k in range(count)]


def test_splitmix_known_value():
    # first output of the reference generator seeded with 0
    assert splitmix_ref(0, 0) == 0xE220A8397B1DCDAF
    assert int(splitmix64(0, 0, 1)[0]) == 0xE220A8397B1DCDAF


@pytest.mark.parametrize("idx,expected", [(1, 0), (2, 1), (3, 1), (1024, 10), (1023, 9), (2**128, 0), (2**130 + 5, 2)])
def test_skew_index(idx, expected):
    if idx < 2**64:
        assert skew_index(idx) == expected
        assert int(skew_index(np.array([idx], dtype=np.uint64))[0]) == expected
    else:
        assert skew_index(idx) == expected


def test_skew_index_is_one_based():
    with pytest.raises(ValueError):
        skew_index(0)


def test_skew_table_shape_and_alphabet():
    t = skew_table(42)
    assert t.shape == (SKEW_ENTRIES, SKEW_WIDTH) == (128, 6)
    assert t.min() >= 32 and t.max() <= 126
    assert np.array_equal(t, skew_table(42))
    assert not np.array_equal(t, skew_table(43))


def test_generate_zero_records(tmp_path):
    rf = generate(0, 1, False, tmp_path / "e.dat")
    assert rf.record_count == 0
    assert (tmp_path / "e.dat").read_bytes() == b""


def test_generate_rejects_negative(tmp_path):
    with pytest.raises(ValueError):
        generate(-1, 0, False, tmp_path / "x")


@pytest.mark.parametrize("skew", [False, True])
def test_generate_is_deterministic(tmp_path, skew):
    a = generate(150_000, 9, skew, tmp_path / "a").path.read_bytes()
    b = generate(150_000, 9, skew, tmp_path / "b").path.read_bytes()
    c = generate(150_000, 10, skew, tmp_path / "c").path.read_bytes()
    assert hashlib.sha256(a).digest() == hashlib.sha256(b).digest()
    assert a != c


def test_record_layout(tmp_path):
    raw = generate(30, 0xABC, False, tmp_path / "g").path.read_bytes()
    recs = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 100)
    assert recs[:, :10].min() >= 32 and recs[:, :10].max() <= 126
    r7 = bytes(recs[7])
    assert r7[10:26] == b"0000000000000ABC"
    assert r7[26:42] == b"0000000000000007"
    assert r7[42:] == b"H" * 58


@given(st.integers(0, 10**6), st.integers(1, 300), st.booleans())
@settings(max_examples=25, deadline=None)
def test_ranges_are_independent(start, count, skew):
    whole = make_records(0, start + count, 5, skew) if start + count <= 4096 else None
    part = make_records(start, count, 5, skew)
    if whole is not None:
        assert np.array_equal(whole[start:], part)
    assert np.array_equal(make_records(start + count - 1, 1, 5, skew), part[-1:])


def test_skewed_keys_use_table_prefixes():
    table = skew_table(3)
    recs = make_records(0, 2048, 3, True, table)
    assert np.array_equal(recs[0, :6], table[0])
    assert np.array_equal(recs[1023, :6], table[10])
    assert np.array_equal(recs[1022, :6], table[9])


def test_skewed_histogram_much_wider_than_uniform():
    def spread(skew):
        keys = encode_keys(make_records(0, 10**6, 1, skew))
        sizes = np.bincount(radix_partitions(keys, 1000), minlength=1000)
        return sizes.std()

    assert spread(True) >= 10 * spread(False)


# validation ---------------------------------------------------------------------


def recs_with_keys(keys):
    return b"".join(k + bytes(90) for k in keys)


def test_validate_sorted_three_records(write_file):
    raw = recs_with_keys([b"AAAAAAAAAA", b"AAAAAAAAAB", b"ZZZZZZZZZZ"])
    rep = validate(write_file(raw))
    assert rep.sorted and rep.first_violation_index is None
    assert rep.checksum == checksum(raw)
    assert rep.record_count == 3


@pytest.mark.parametrize("k", [1, 2, 9])
def test_validate_planted_inversion(write_file, k):
    keys = [f"{i:010d}".encode() for i in range(10)]
    keys[k], keys[k - 1] = keys[k - 1], keys[k]
    rep = validate(write_file(recs_with_keys(keys)))
    assert not rep.sorted
    assert rep.first_violation_index == k
    assert "NOT sorted" in rep.summary()


def test_validate_inversion_across_chunks(write_file):
    keys = [f"{i:010d}".encode() for i in range(70_000)]
    keys[65536], keys[65535] = keys[65535], keys[65536]
    rep = validate(write_file(recs_with_keys(keys)))
    assert rep.first_violation_index == 65536


def test_validate_equal_keys_are_sorted(write_file):
    assert validate(write_file(recs_with_keys([b"K" * 10] * 5))).sorted


def test_validate_empty(write_file):
    rep = validate(write_file(b""))
    assert rep.sorted and rep.checksum == 0 and rep.record_count == 0


def test_validate_truncated(write_file):
    with pytest.raises(MalformedFileError):
        validate(write_file(b"a" * 250))


def test_validate_checksum_matches_generated_input(tmp_path):
    rf = generate(5000, 2, True, tmp_path / "in")
    assert validate(rf.path).checksum == checksum(rf.path.read_bytes())
