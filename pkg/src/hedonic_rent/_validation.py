"""Input validation helpers shared by the estimators."""

import numpy as np

from .exceptions import ColumnMismatchError, DegenerateInputError


def as_float_column(values, name="values", allow_empty=False):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0 and not allow_empty:
        raise DegenerateInputError(f"{name} is empty")
    return arr


def check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{name} contains non-finite entries")
    return arr


def check_paired(a, b, names=("predictions", "observations")):
    a = as_float_column(a, names[0])
    b = as_float_column(b, names[1])
    if a.shape != b.shape:
        raise ColumnMismatchError(
            f"length mismatch: {names[0]} has {a.size}, {names[1]} has {b.size}"
        )
    check_finite(a, names[0])
    check_finite(b, names[1])
    return a, b


def check_matrix(X, n_columns=None, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ColumnMismatchError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if n_columns is not None and X.shape[1] != n_columns:
        raise ColumnMismatchError(f"{name} has {X.shape[1]} columns, expected {n_columns}")
    check_finite(X, name)
    return X


def check_column_names(got, expected):
    got, expected = list(got), list(expected)
    if got != expected:
        raise ColumnMismatchError(f"column mismatch: got {got}, expected {expected}")
