from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elsort.encoding import encode_keys
from elsort.errors import PartitionOverflowError
from elsort.internal_sort import SortBuffer, learned_sort, placement_slots, touch_up
from elsort.model import train
from elsort.records import as_records


def records_from_keys(keys: list[bytes]) -> np.ndarray:
    return as_records(b"".join(k + i.to_bytes(4, "big") + bytes(86) for i, k in enumerate(keys)))


def oracle_keys(recs: np.ndarray) -> list[bytes]:
    return sorted(bytes(r[:10]) for r in recs)


def sorted_keys(buf: SortBuffer) -> list[bytes]:
    return [bytes(r[:10]) for r in buf.sorted_records()]


def sort_with_own_model(recs: np.ndarray, leaves: int = 16) -> SortBuffer:
    buf = SortBuffer.from_records(recs)
    keys = np.sort(buf.encoded)
    if len(keys) < 2:
        keys = np.repeat(keys, 2) if len(keys) else np.array([0, 1], dtype=np.uint64)
    return learned_sort(buf, train(keys, leaves))


key_st = st.binary(min_size=10, max_size=10).map(lambda b: bytes(32 + x % 95 for x in b))
narrow_key_st = st.binary(min_size=10, max_size=10).map(lambda b: bytes(65 + x % 3 for x in b))


def test_sorted_buffer_needs_no_moves():
    keys = sorted(bytes(np.random.default_rng(1).integers(32, 127, 10, dtype=np.uint8)) for _ in range(500))
    buf = sort_with_own_model(records_from_keys(keys))
    assert buf.moves == 0
    assert np.array_equal(buf.sorted_records(), buf.records)


def test_reverse_sorted_buffer():
    rng = np.random.default_rng(2)
    keys = sorted((bytes(rng.integers(32, 127, 10, dtype=np.uint8)) for _ in range(1000)), reverse=True)
    buf = sort_with_own_model(records_from_keys(keys))
    assert sorted_keys(buf) == sorted(keys)


def test_shared_nine_byte_prefix_ordered_by_touch_up():
    tails = b"~ A!z0m}#"
    keys = [b"SAMEPREFX" + bytes([t]) for t in tails]
    recs = records_from_keys(keys)
    buf = SortBuffer.from_records(recs)
    assert len(set(buf.encoded.tolist())) == 1
    learned_sort(buf, train(np.array([0, 10**17], dtype=np.uint64), 4))
    assert sorted_keys(buf) == sorted(keys)
    assert buf.moves > 0


def test_all_duplicates():
    recs = records_from_keys([b"DUPLICATE!"] * 3000)
    buf = sort_with_own_model(recs)
    assert sorted_keys(buf) == [b"DUPLICATE!"] * 3000
    assert sorted(buf.order.tolist()) == list(range(3000))


def test_overflow_raises():
    buf = SortBuffer.from_records(records_from_keys([b"A" * 10] * 5), capacity=4)
    with pytest.raises(PartitionOverflowError):
        learned_sort(buf, train(np.array([0, 1], dtype=np.uint64), 1))


@pytest.mark.parametrize("n", [0, 1])
def test_tiny_buffers(n):
    buf = SortBuffer.from_records(records_from_keys([b"X" * 10] * n))
    learned_sort(buf, train(np.array([0, 1], dtype=np.uint64), 1))
    assert buf.order.tolist() == list(range(n))


def test_partition_local_placement():
    # a partition's keys are spread across its own slots, not the whole range
    rng = np.random.default_rng(3)
    allkeys = np.sort(rng.integers(0, 10**17, size=20_000, dtype=np.uint64))
    m = train(allkeys, 100)
    f = 10
    parts = m.partitions(allkeys, f)
    enc = allkeys[parts == 4]
    slots = placement_slots(enc, m, 4, f)
    assert slots.min() >= 0 and slots.max() <= len(enc) - 1
    assert np.all(np.diff(slots) >= 0)
    assert len(np.unique(slots)) > len(enc) // 4


def test_learned_sort_inside_partition_with_global_model():
    rng = np.random.default_rng(4)
    keys = [bytes(rng.integers(32, 127, 10, dtype=np.uint8)) for _ in range(20_000)]
    recs = records_from_keys(keys)
    enc = encode_keys(recs)
    m = train(np.sort(enc), 200)
    f = 8
    parts = m.partitions(enc, f)
    for j in range(f):
        buf = SortBuffer.from_records(recs[parts == j])
        learned_sort(buf, m, j, f)
        assert sorted_keys(buf) == oracle_keys(recs[parts == j])


@settings(max_examples=80, deadline=None)
@given(st.lists(key_st, max_size=400), st.integers(min_value=1, max_value=50))
def test_learned_sort_matches_oracle(keys, leaves):
    recs = records_from_keys(keys)
    buf = sort_with_own_model(recs, leaves)
    assert sorted_keys(buf) == sorted(keys)
    assert sorted(buf.order.tolist()) == list(range(len(keys)))


@settings(max_examples=60, deadline=None)
@given(st.lists(narrow_key_st, max_size=300))
def test_learned_sort_many_ties(keys):
    buf = sort_with_own_model(records_from_keys(keys))
    assert sorted_keys(buf) == sorted(keys)


@settings(max_examples=40, deadline=None)
@given(st.lists(key_st, max_size=200), st.lists(key_st, min_size=2, max_size=50))
def test_bad_model_still_sorts(keys, train_keys):
    # a model trained on unrelated keys only costs speed, not correctness
    recs = records_from_keys(keys)
    buf = SortBuffer.from_records(recs)
    m = train(np.sort(encode_keys(records_from_keys(train_keys))), 7)
    learned_sort(buf, m)
    assert sorted_keys(buf) == sorted(keys)


# touch-up ------------------------------------------------------------------


def test_touch_up_sorted_is_zero_moves():
    recs = records_from_keys([bytes([65 + i % 26]) * 10 for i in range(26)])
    order, moves = touch_up(recs)
    assert moves == 0
    assert order.tolist() == list(range(26))


@pytest.mark.parametrize("k", [1, 5, 17])
def test_touch_up_counts_displacement(k):
    keys = [f"{i:010d}".encode() for i in range(40)]
    moved = keys.pop(30)
    keys.insert(30 - k, moved)
    order, moves = touch_up(records_from_keys(keys))
    assert moves == k
    assert [keys[i] for i in order] == sorted(keys)


@settings(max_examples=60, deadline=None)
@given(st.lists(key_st, max_size=120))
def test_touch_up_random(keys):
    order, _ = touch_up(records_from_keys(keys))
    assert [keys[i] for i in order] == sorted(keys)


def test_touch_up_is_stable():
    keys = [b"B" * 10, b"A" * 10, b"B" * 10, b"A" * 10]
    order, _ = touch_up(records_from_keys(keys))
    assert order.tolist() == [1, 3, 0, 2]
