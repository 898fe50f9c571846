"""External sorting of 100-byte ASCII records with a learned CDF model.

Records are scattered into key-ordered partitions predicted by a two-layer
recursive model index, each partition is sorted in memory, and partitions are
written at precomputed offsets, so no merge phase is needed. A mergesort
baseline, data generator, validator and benchmark harness ship alongside.
"""

from .config import RunConfig
from .datagen import ValidationReport, generate, validate
from .encoding import encode, encode_keys, max_observed_length
from .instrument import RunReport
from .internal_sort import SortBuffer, learned_sort, touch_up
from .mergesort import mergesort
from .model import CdfModel, PartitionPlan, draw_sample, partition_of, predict, radix_partition_of, train
from .records import Record, RecordFile, compare_keys, file_checksum, record_hash
from .run import run_sort
from .sorter import elsar_sort

__all__ = [
    "CdfModel",
    "PartitionPlan",
    "Record",
    "RecordFile",
    "RunConfig",
    "RunReport",
    "SortBuffer",
    "ValidationReport",
    "compare_keys",
    "draw_sample",
    "elsar_sort",
    "encode",
    "encode_keys",
    "file_checksum",
    "generate",
    "learned_sort",
    "max_observed_length",
    "mergesort",
    "partition_of",
    "predict",
    "radix_partition_of",
    "record_hash",
    "run_sort",
    "touch_up",
    "train",
    "validate",
]
