"""Small input-validation helpers used by the estimators and pipeline stages."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .exceptions import DegenerateVariance, MissingColumn, NonAlignedDesign


def check_columns(frame: pd.DataFrame, required, source: str = "") -> None:
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MissingColumn(missing, source)


def as_float_vector(values, name: str = "values") -> np.ndarray:
    """Return ``values`` as a 1-d float64 array, rejecting NaN and inf."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


def check_consistent_length(*arrays) -> int:
    lengths = {len(a) for a in arrays if a is not None}
    if len(lengths) > 1:
        raise NonAlignedDesign(f"inconsistent numbers of rows: {sorted(lengths)}")
    return lengths.pop() if lengths else 0


def sample_moments(values, name: str = "values") -> tuple[float, float]:
    """Two-pass sample mean and standard deviation (n - 1 denominator).

    Raises
    ------
    DegenerateVariance
        If fewer than two values are given or all values are equal.
    """
    arr = as_float_vector(values, name)
    if arr.size < 2:
        raise DegenerateVariance(f"{name}: need at least two values, got {arr.size}")
    mean = arr.sum() / arr.size
    dev = arr - mean
    sd = float(np.sqrt((dev @ dev) / (arr.size - 1)))
    if not sd > 0.0 or np.all(arr == arr[0]):
        raise DegenerateVariance(f"{name}: all values are equal")
    return float(mean), sd


def group_codes(labels) -> tuple[np.ndarray, np.ndarray]:
    """Integer codes in ``0..G-1`` plus the sorted unique labels."""
    uniques, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes.astype(np.intp).reshape(-1), uniques
