"""Block rearrangement of a matrix.

A matrix A of shape (m1*m2, n1*n2) is viewed as an m1-by-n1 grid of
m2-by-n2 blocks.  The rearrangement R(A) lists vec(block)^T as rows,
block (i, j) landing in row j*m1 + i (0-based, column-major over the
grid).  Every entry of A appears exactly once in R(A), so Frobenius
norms match, and a rank-k SVD of R(A) corresponds to a k-term sum of
Kronecker products approximating A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class BlockScheme:
    """Block partition sizes: an m1-by-n1 grid of m2-by-n2 blocks."""

    m1: int
    m2: int
    n1: int
    n2: int

    def __post_init__(self):
        for field in ("m1", "m2", "n1", "n2"):
            if getattr(self, field) < 1:
                raise ValidationError(f"BlockScheme.{field} must be >= 1")

    @property
    def rows(self) -> int:
        return self.m1 * self.m2

    @property
    def cols(self) -> int:
        return self.n1 * self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def rearranged_shape(self) -> tuple[int, int]:
        return (self.m1 * self.n1, self.m2 * self.n2)

    @property
    def max_kron_rank(self) -> int:
        return min(self.rearranged_shape)

    @classmethod
    def square_image(cls, n: int) -> "BlockScheme":
        """Scheme for an n^2-by-n^2 operator acting on n-by-n images."""
        return cls(n, n, n, n)

    def check_matrix(self, a: np.ndarray) -> None:
        if a.shape != self.shape:
            raise ValidationError(
                f"matrix shape {a.shape} does not factor as "
                f"({self.m1}*{self.m2}, {self.n1}*{self.n2})"
            )


def rearrange(a: np.ndarray, scheme: BlockScheme) -> np.ndarray:
    """Return R(A) of shape (m1*n1, m2*n2) for the given block scheme."""
    a = np.asarray(a)
    scheme.check_matrix(a)
    m1, m2, n1, n2 = scheme.m1, scheme.m2, scheme.n1, scheme.n2
    blocks = a.reshape(m1, m2, n1, n2)
    # Row order is column-major over the block grid, and each block is
    # vectorized column by column, hence the (n1, m1, n2, m2) layout.
    return blocks.transpose(2, 0, 3, 1).reshape(m1 * n1, m2 * n2).copy()


def inverse_rearrange(r: np.ndarray, scheme: BlockScheme) -> np.ndarray:
    """Undo :func:`rearrange`, rebuilding the (m1*m2)-by-(n1*n2) matrix."""
    r = np.asarray(r)
    if r.shape != scheme.rearranged_shape:
        raise ValidationError(
            f"rearranged shape {r.shape} does not match scheme {scheme.rearranged_shape}"
        )
    m1, m2, n1, n2 = scheme.m1, scheme.m2, scheme.n1, scheme.n2
    blocks = r.reshape(n1, m1, n2, m2).transpose(1, 3, 0, 2)
    return blocks.reshape(m1 * m2, n1 * n2).copy()
