"""Small argument-checking helpers used across modules and estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import NumericalError, ValidationError


def require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array, defaulting to double for non-float input."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return arr


def as_vector(a, name: str = "vector", size: int | None = None) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if size is not None and arr.size != size:
        raise ValidationError(f"{name} must have length {size}, got {arr.size}")
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return arr


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite values")
    return arr


def as_positive(value, name: str) -> float:
    value = float(value)
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value
