"""Dense building blocks: column-major vectorization, precision control,
Gram-Schmidt orthonormalization, and small dense SVDs.

Matrices and vectors are plain numpy arrays.  The working precision is
carried by the array dtype; only ``float32`` and ``float64`` are
admitted, and ``cast`` is the single sanctioned way to move between
them.  All stacking conventions are column-major, which ``vec`` and
``unvec`` translate to numpy's row-major storage in one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, RankDeficiencyError, ValidationError

PRECISIONS = {
    "single": np.float32,
    "double": np.float64,
}

# Largest min-dimension accepted by svd_small; everything in this code
# path is a projected or rearranged core matrix, never the full operator.
SVD_SMALL_LIMIT = 4096


def dtype_for(precision: str) -> np.dtype:
    """Map a precision name ('single' or 'double') to a numpy dtype."""
    try:
        return np.dtype(PRECISIONS[precision])
    except KeyError:
        raise ValidationError(
            f"unknown precision {precision!r}; expected one of {sorted(PRECISIONS)}"
        ) from None


def precision_of(arr: np.ndarray) -> str:
    """Return the precision name of an array, rejecting foreign dtypes."""
    for name, dt in PRECISIONS.items():
        if arr.dtype == dt:
            return name
    raise ValidationError(f"unsupported dtype {arr.dtype}; expected float32 or float64")


def eps_for(dtype_like) -> float:
    """Machine epsilon for a dtype or precision name."""
    if isinstance(dtype_like, str):
        dtype_like = dtype_for(dtype_like)
    return float(np.finfo(dtype_like).eps)


def cast(arr: np.ndarray, precision: str) -> np.ndarray:
    """Copy ``arr`` into the given precision.

    Narrowing rounds to nearest; values beyond the target range become
    signed infinities rather than raising, matching IEEE downcast
    semantics.
    """
    dt = dtype_for(precision)
    with np.errstate(over="ignore"):
        return np.asarray(arr).astype(dt)


def fro_norm(mat: np.ndarray) -> float:
    """Frobenius norm, invariant under entry permutation.

    Squares are accumulated in sorted order, so two matrices holding
    the same entries in different positions get bit-identical norms.
    """
    sq = np.sort(np.square(np.asarray(mat, dtype=np.float64).ravel()))
    return float(np.sqrt(np.sum(sq)))


def vec(mat: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into one vector."""
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValidationError(f"vec expects a matrix, got ndim={mat.ndim}")
    return mat.reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`: rebuild a rows-by-cols matrix column by column."""
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValidationError(f"unvec expects a vector, got ndim={v.ndim}")
    if v.size != rows * cols:
        raise ValidationError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


@dataclass
class TruncatedSvd:
    """A rank-k factorization ``u @ diag(sigma) @ v.T``.

    ``u`` is m-by-k with orthonormal columns, ``sigma`` is length k and
    non-increasing, ``v`` is n-by-k with orthonormal columns.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.ndim != 2 or self.v.ndim != 2 or self.sigma.ndim != 1:
            raise ValidationError("TruncatedSvd expects u, v matrices and a sigma vector")
        k = self.sigma.size
        if self.u.shape[1] != k or self.v.shape[1] != k:
            raise ValidationError(
                f"inconsistent rank: u has {self.u.shape[1]} columns, "
                f"v has {self.v.shape[1]}, sigma has {k} entries"
            )
        if k and np.any(np.diff(self.sigma) > 0):
            raise ValidationError("sigma must be non-increasing")
        if k and self.sigma[-1] < 0:
            raise ValidationError("sigma must be non-negative")

    @property
    def k(self) -> int:
        return self.sigma.size

    def reconstruct(self) -> np.ndarray:
        """Form the dense rank-k matrix (intended for small problems only)."""
        return (self.u * self.sigma) @ self.v.T

    def truncate(self, k: int) -> "TruncatedSvd":
        if not 0 < k <= self.k:
            raise ValidationError(f"cannot truncate rank-{self.k} factorization to k={k}")
        return TruncatedSvd(self.u[:, :k], self.sigma[:k], self.v[:, :k])


def svd_small(mat: np.ndarray) -> TruncatedSvd:
    """Full SVD of a small dense matrix, returned in truncated form.

    Intended for projected core matrices and rearranged operators whose
    minimum dimension stays below ``SVD_SMALL_LIMIT``.  The returned
    factorization keeps all min(m, n) triplets; callers truncate.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValidationError(f"svd_small expects a matrix, got ndim={mat.ndim}")
    if min(mat.shape) > SVD_SMALL_LIMIT:
        raise ValidationError(
            f"matrix of shape {mat.shape} exceeds the small-problem bound {SVD_SMALL_LIMIT}"
        )
    precision_of(mat)
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge on shape {mat.shape}") from exc
    return TruncatedSvd(u, s, vt.T)


def orthonormalize(mat: np.ndarray, drop_tol: float | None = None) -> np.ndarray:
    """Orthonormalize the columns of ``mat`` by modified Gram-Schmidt.

    A second projection pass is applied to each column, which keeps the
    basis orthogonal to working precision even for ill-scaled inputs.

    Parameters
    ----------
    mat : array, shape (m, n)
        Columns to orthonormalize, n <= m.
    drop_tol : float, optional
        Norm below which a projected column counts as zero.  Defaults to
        ``eps * sqrt(m) * max column norm`` in the dtype of ``mat``.

    Raises
    ------
    RankDeficiencyError
        If some column falls below ``drop_tol`` after projection.  The
        error records the column index.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ValidationError(f"orthonormalize expects a matrix, got ndim={mat.ndim}")
    m, n = mat.shape
    if n > m:
        raise ValidationError(f"cannot orthonormalize {n} columns in dimension {m}")
    precision_of(mat)
    if drop_tol is None:
        col_norms = np.linalg.norm(mat, axis=0)
        scale = float(col_norms.max()) if n else 0.0
        drop_tol = eps_for(mat.dtype) * np.sqrt(m) * scale
    q = mat.copy()
    for j in range(n):
        v = q[:, j]
        for _ in range(2):
            for i in range(j):
                v -= (q[:, i] @ v) * q[:, i]
        norm = np.linalg.norm(v)
        if not np.isfinite(norm):
            raise NumericalError(f"non-finite column norm at column {j}")
        if norm <= drop_tol:
            raise RankDeficiencyError(j)
        q[:, j] = v / norm
    return q
