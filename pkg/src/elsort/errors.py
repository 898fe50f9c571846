"""Exception hierarchy shared across the toolkit.

Each class carries the CLI exit code it maps to so the command layer can
translate failures without a lookup table.
"""

from __future__ import annotations


class ElsortError(Exception):
    exit_code = 1


class ConfigError(ElsortError):
    exit_code = 2


class MalformedFileError(ElsortError):
    """File length is not a whole number of records."""

    exit_code = 3


class NonPrintableKeyError(ElsortError, ValueError):
    pass


class EmptyInputError(ElsortError, ValueError):
    pass


class InsufficientSampleError(ElsortError, ValueError):
    pass


class OversizedPartitionError(ElsortError):
    """A single partition does not fit the memory budget; use more partitions."""


class PartitionOverflowError(ElsortError):
    pass


class InvariantViolation(ElsortError):
    """An internal ordering or layout invariant was broken. Always a bug."""
