"""First-difference regularization operators and the augmented system.

For an n-by-n image x (column-major vectorized), the horizontal and
vertical first differences are scaled by one half:

    diff_x(x) = vec(X @ L.T)    (differences across columns)
    diff_y(x) = vec(L @ X)      (differences across rows)

with L the (n-1)-by-n stencil [1, -1]/2 and X the n-by-n image.  Both
map length n^2 to length P = n*(n-1).  The augmented operator stacks
the blur operator on top of the two scaled difference maps; it is what
the inner least-squares solver sees.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError
from .linalg import unvec, vec
from .metrics import FlopCounter
from .operators import DenseOperator, as_operator
from .validation import as_vector


def first_difference_matrix(n: int) -> np.ndarray:
    """Dense (n-1)-by-n matrix of the halved first-difference stencil."""
    if n < 2:
        raise ValidationError("first differences need n >= 2")
    l_mat = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    l_mat[idx, idx] = 0.5
    l_mat[idx, idx + 1] = -0.5
    return l_mat


def diff_x(x: np.ndarray, n: int) -> np.ndarray:
    xm = unvec(as_vector(x, "x", n * n), n, n)
    return vec(0.5 * (xm[:, :-1] - xm[:, 1:]))


def diff_y(x: np.ndarray, n: int) -> np.ndarray:
    xm = unvec(as_vector(x, "x", n * n), n, n)
    return vec(0.5 * (xm[:-1, :] - xm[1:, :]))


def diff_x_t(w: np.ndarray, n: int) -> np.ndarray:
    """Transpose of diff_x: scatter column differences back."""
    wm = unvec(as_vector(w, "w", n * (n - 1)), n, n - 1)
    out = np.zeros((n, n))
    out[:, :-1] += 0.5 * wm
    out[:, 1:] -= 0.5 * wm
    return vec(out)


def diff_y_t(w: np.ndarray, n: int) -> np.ndarray:
    """Transpose of diff_y: scatter row differences back."""
    wm = unvec(as_vector(w, "w", n * (n - 1)), n - 1, n)
    out = np.zeros((n, n))
    out[:-1, :] += 0.5 * wm
    out[1:, :] -= 0.5 * wm
    return vec(out)


class AugmentedOp:
    """Stack of the forward operator and both scaled difference maps.

    apply(x)  -> [A x; lam_x * diff_x(x); lam_y * diff_y(x)]
    apply_t(y) decomposes y into the three row blocks and sums the
    transposed contributions.

    The forward operator may be a dense matrix (charged 2*T*N flops per
    application on the counter) or any apply/apply_t object such as a
    Kronecker sum, which does its own accounting.
    """

    def __init__(self, forward, n: int, lam_x: float, lam_y: float):
        self.forward = as_operator(forward)
        m, ncols = self.forward.shape
        if ncols != n * n:
            raise ValidationError(
                f"operator with {ncols} columns cannot act on {n}x{n} images"
            )
        if n < 2:
            raise ValidationError("augmented system needs image side n >= 2")
        self.n = int(n)
        self.lam_x = float(lam_x)
        self.lam_y = float(lam_y)
        self.m = int(m)
        self.p_rows = n * (n - 1)
        self._dense = isinstance(self.forward, DenseOperator)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m + 2 * self.p_rows, self.n * self.n)

    def apply(self, x: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        x = as_vector(x, "x", self.n * self.n)
        top = self.forward.apply(x, counter=counter)
        if self._dense and counter is not None:
            counter.add_dense(self.shape[0], self.shape[1])
        return np.concatenate(
            [top, self.lam_x * diff_x(x, self.n), self.lam_y * diff_y(x, self.n)]
        )

    def apply_t(self, y: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        t_rows = self.shape[0]
        y = as_vector(y, "y", t_rows)
        y1 = y[: self.m]
        y2 = y[self.m : self.m + self.p_rows]
        y3 = y[self.m + self.p_rows :]
        out = self.forward.apply_t(y1, counter=counter)
        if self._dense and counter is not None:
            counter.add_dense(t_rows, self.shape[1])
        out = out + self.lam_x * diff_x_t(y2, self.n)
        out = out + self.lam_y * diff_y_t(y3, self.n)
        return out


def aug_rhs(
    b: np.ndarray,
    dx: np.ndarray,
    dy: np.ndarray,
    gx: np.ndarray,
    gy: np.ndarray,
    lam_x: float,
    lam_y: float,
) -> np.ndarray:
    """Right-hand side [b; lam_x (dx - gx); lam_y (dy - gy)]."""
    return np.concatenate([b, lam_x * (dx - gx), lam_y * (dy - gy)])
