"""Backward stochastic dynamic equations on time scales."""

import csv
import io

from ._tsbsde import (
    DomainError,
    GridScale,
    NumericalError,
    TimeScale,
    ValidationError,
    canonical_scenario,
    gaussian_linear_reference,
    partition,
    run,
    sample_bm,
    set_thread_count,
    thread_count,
)

__all__ = [
    "DomainError",
    "GridScale",
    "NumericalError",
    "TimeScale",
    "ValidationError",
    "canonical_scenario",
    "gaussian_linear_reference",
    "partition",
    "read_csv",
    "run",
    "sample_bm",
    "set_thread_count",
    "thread_count",
]


def read_csv(text):
    """Parse an artifact CSV into a list of dicts with float values."""
    rows = csv.DictReader(io.StringIO(text))
    return [{k: float(v) for k, v in row.items()} for row in rows]
