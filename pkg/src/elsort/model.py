"""Two-layer recursive model index over encoded keys.

The root is a single non-negative-slope line that routes a key to one of
``L`` leaves. Each leaf is a least-squares line whose output is clamped to
the slice of ``[0, 1]`` spanned by the sample points routed to it. Leaf
slices tile ``[0, 1]`` in order, so the model is globally monotone: for
``a <= b`` we always get ``predict(a) <= predict(b)``. That property is what
makes partition files safe to concatenate.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoding import KEY_SPACE, MAX_ENCODED_CHARS, encode_keys
from .errors import EmptyInputError, InsufficientSampleError
from .records import RECORD_SIZE, record_count

DEFAULT_SAMPLE_RATE = 0.01
DEFAULT_SAMPLE_CAP = 10_000_000
DEFAULT_LEAVES = 1000


@dataclass
class TrainingSample:
    keys: np.ndarray  # sorted uint64 encodings
    sample_rate: float = DEFAULT_SAMPLE_RATE
    cap: int = DEFAULT_SAMPLE_CAP
    bytes_read: int = 0

    def __post_init__(self) -> None:
        self.keys = np.sort(np.asarray(self.keys, dtype=np.uint64))
        if len(self.keys) > self.cap:
            raise ValueError(f"sample of {len(self.keys)} keys exceeds cap {self.cap}")

    def __len__(self) -> int:
        return len(self.keys)


def sample_size(pool: int, rate: float, cap: int, floor: int = 0) -> int:
    # the small epsilon keeps exact products such as 0.01 * 1000 from rounding up
    want = math.ceil(rate * pool - 1e-9)
    return min(cap, pool, max(want, floor))


def draw_sample(
    path: str | os.PathLike,
    rate: float = DEFAULT_SAMPLE_RATE,
    cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
    *,
    batch_records: int | None = None,
    scope: str = "batch",
    floor: int = 0,
) -> TrainingSample:
    """Sample encoded keys uniformly at random for training.

    With ``scope="batch"`` the pool is the first ``batch_records`` records of
    the file, i.e. the first batch worker 0 reads. ``scope="file"`` samples
    the whole file instead, which is robust to inputs whose order correlates
    with key value.
    """
    if not 0 < rate <= 1:
        raise ValueError(f"sample rate must be in (0, 1], got {rate}")
    n = record_count(path)
    if n == 0:
        raise EmptyInputError(f"{path} has no records")
    if scope == "batch":
        pool = n if batch_records is None else min(n, batch_records)
    elif scope == "file":
        pool = n
    else:
        raise ValueError(f"unknown sample scope {scope!r}")

    k = sample_size(pool, rate, cap, floor)
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(pool, size=k, replace=False))

    if scope == "batch":
        with open(path, "rb") as fh:
            raw = fh.read(pool * RECORD_SIZE)
        recs = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_SIZE)[picks]
        read = pool * RECORD_SIZE
    else:
        mm = np.memmap(path, dtype=np.uint8, mode="r", shape=(n, RECORD_SIZE))
        recs = np.asarray(mm[picks, :MAX_ENCODED_CHARS])
        del mm
        read = k * RECORD_SIZE
    return TrainingSample(encode_keys(recs), rate, cap, bytes_read=read)


def _fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares in centred form; returns (slope, x_mean, y_mean), slope >= 0."""
    xm = float(x.mean())
    ym = float(y.mean())
    dx = x - xm
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, y - ym)) / sxx if sxx > 0 else 0.0
    return max(slope, 0.0), xm, ym


@dataclass
class CdfModel:
    leaves: int
    root_slope: float
    root_x: float
    root_y: float
    # per-leaf arrays
    lo: np.ndarray
    hi: np.ndarray
    slope: np.ndarray
    ref_key: np.ndarray  # int64 anchor key of each leaf line
    ref_y: np.ndarray
    sample_size: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def leaf_of(self, keys: np.ndarray) -> np.ndarray:
        kf = np.asarray(keys, dtype=np.uint64).astype(np.float64)
        r = self.root_y + self.root_slope * (kf - self.root_x)
        # round half down
        idx = np.ceil(r - 0.5)
        return np.clip(idx, 0, self.leaves - 1).astype(np.int64)

    def predict_many(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        leaf = self.leaf_of(keys)
        d = (keys.astype(np.int64) - self.ref_key[leaf]).astype(np.float64)
        y = self.ref_y[leaf] + self.slope[leaf] * d
        return np.minimum(np.maximum(y, self.lo[leaf]), self.hi[leaf])

    def predict(self, key: int) -> float:
        return float(self.predict_many(np.array([key], dtype=np.uint64))[0])

    def partitions(self, keys: np.ndarray, f: int) -> np.ndarray:
        p = np.floor(self.predict_many(keys) * f).astype(np.int64)
        return np.minimum(p, f - 1)

    def dump(self, path: str | os.PathLike) -> None:
        """Write a plain-text dump (leaf bounds and coefficients) for debugging."""
        lines = [
            f"rmi leaves={self.leaves} sample={self.sample_size}",
            f"root {float(self.root_slope)!r} {float(self.root_x)!r} {float(self.root_y)!r}",
        ]
        for j in range(self.leaves):
            lines.append(
                f"{j} {float(self.lo[j])!r} {float(self.hi[j])!r} {float(self.slope[j])!r} "
                f"{int(self.ref_key[j])} {float(self.ref_y[j])!r}"
            )
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CdfModel":
        header, root, *rows = Path(path).read_text().split("\n")[:-1]
        fields = dict(kv.split("=") for kv in header.split()[1:])
        rs, rx, ry = (float(v) for v in root.split()[1:])
        cols = [r.split() for r in rows]
        return cls(
            leaves=int(fields["leaves"]),
            root_slope=rs,
            root_x=rx,
            root_y=ry,
            lo=np.array([float(c[1]) for c in cols]),
            hi=np.array([float(c[2]) for c in cols]),
            slope=np.array([float(c[3]) for c in cols]),
            ref_key=np.array([int(c[4]) for c in cols], dtype=np.int64),
            ref_y=np.array([float(c[5]) for c in cols]),
            sample_size=int(fields["sample"]),
        )


def train(sample: TrainingSample | np.ndarray, leaves: int = DEFAULT_LEAVES) -> CdfModel:
    keys = sample.keys if isinstance(sample, TrainingSample) else np.sort(np.asarray(sample, dtype=np.uint64))
    n = len(keys)
    if n < 2:
        raise InsufficientSampleError(f"need at least 2 sample keys, got {n}")
    if leaves < 1:
        raise ValueError("leaf count must be >= 1")

    kf = keys.astype(np.float64)
    ranks = np.arange(n, dtype=np.float64)
    cdf = ranks / (n - 1)

    # root target: centre of the leaf a point should land in
    target = (ranks + 0.5) * leaves / n - 0.5
    root_slope, root_x, root_y = _fit_line(kf, target)
    model = CdfModel(
        leaves=leaves,
        root_slope=root_slope,
        root_x=root_x,
        root_y=root_y,
        lo=np.zeros(leaves),
        hi=np.zeros(leaves),
        slope=np.zeros(leaves),
        ref_key=np.zeros(leaves, dtype=np.int64),
        ref_y=np.zeros(leaves),
        sample_size=n,
    )

    routed = model.leaf_of(keys)  # non-decreasing since keys are sorted
    ids = np.arange(leaves)
    start = np.searchsorted(routed, ids, side="left")
    stop = np.searchsorted(routed, ids, side="right")
    # same expression for hi[j] and lo[j+1] so the slices meet exactly
    model.lo = np.minimum(start / (n - 1), 1.0)
    model.hi = np.minimum(stop / (n - 1), 1.0)
    model.hi[-1] = 1.0

    ikeys = keys.astype(np.int64)
    for j in np.flatnonzero(stop > start):
        a, b = start[j], stop[j]
        ref = ikeys[a]
        d = (ikeys[a:b] - ref).astype(np.float64)
        s, dm, ym = _fit_line(d, cdf[a:b])
        model.slope[j] = s
        model.ref_key[j] = ref
        model.ref_y[j] = ym - s * dm
    empty = stop == start
    model.ref_y[empty] = (model.lo[empty] + model.hi[empty]) / 2
    model.ref_key[empty] = 0
    return model


def predict(model: CdfModel, key: int) -> float:
    return model.predict(key)


def partition_of(model: CdfModel, key: int, f: int) -> int:
    if f < 1:
        raise ValueError("partition count must be >= 1")
    return min(math.floor(model.predict(key) * f), f - 1)


def radix_thresholds(f: int) -> np.ndarray:
    """Smallest key of each equi-width bin 1..f-1, computed exactly."""
    return np.array([-(-p * KEY_SPACE // f) for p in range(1, f)], dtype=np.uint64)


def radix_partitions(keys: np.ndarray, f: int, thresholds: np.ndarray | None = None) -> np.ndarray:
    if thresholds is None:
        thresholds = radix_thresholds(f)
    return np.searchsorted(thresholds, np.asarray(keys, dtype=np.uint64), side="right").astype(np.int64)


def radix_partition_of(key: int, f: int) -> int:
    """Equi-width bin of ``key``: ``floor(key * f / 95**9)``."""
    if f < 1:
        raise ValueError("partition count must be >= 1")
    return min(key * f // KEY_SPACE, f - 1)


@dataclass
class PartitionPlan:
    f: int
    r: int
    sizes: np.ndarray  # records per partition

    @property
    def offsets(self) -> np.ndarray:
        """Byte offset of each partition in the output file."""
        out = np.zeros(self.f, dtype=np.int64)
        np.cumsum(self.sizes[:-1], out=out[1:])
        return out * RECORD_SIZE

    @property
    def total(self) -> int:
        return int(self.sizes.sum())
