"""Adapters giving matrices a common apply/apply_t interface."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError
from .metrics import FlopCounter


class DenseOperator:
    """Wraps a dense matrix behind apply/apply_t.

    Does no flop accounting of its own; the augmented system charges
    dense applications wholesale.
    """

    def __init__(self, mat: np.ndarray):
        mat = np.asarray(mat, dtype=np.float64)
        if mat.ndim != 2:
            raise ValidationError("DenseOperator expects a matrix")
        self.mat = mat

    @property
    def shape(self) -> tuple[int, int]:
        return self.mat.shape

    def apply(self, x: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        return self.mat @ x

    def apply_t(self, y: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        return self.mat.T @ y


def as_operator(op):
    """Pass through anything with apply/apply_t/shape, wrap ndarrays."""
    if isinstance(op, np.ndarray):
        return DenseOperator(op)
    for attr in ("apply", "apply_t", "shape"):
        if not hasattr(op, attr):
            raise ValidationError(f"object {type(op).__name__} lacks {attr}; not a linear operator")
    return op


def is_dense(op) -> bool:
    return isinstance(op, (DenseOperator, np.ndarray))
