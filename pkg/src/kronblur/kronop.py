"""Sum-of-Kronecker-products operator.

A k-term factorization stores small factors ax_i (m1-by-n1) and ay_i
(m2-by-n2) representing sum_i kron(ax_i, ay_i).  Applying it to a
vector x goes through the identity

    array(A x) = sum_i ay_i @ array(x) @ ax_i.T

with array(.) the column-major n2-by-n1 matricization, so a matrix of
size (m1*m2)-by-(n1*n2) is applied in O(k) small matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .linalg import TruncatedSvd, unvec, vec
from .metrics import FlopCounter
from .rearrange import BlockScheme

# Refuse to materialize anything bigger than this many entries.
MATERIALIZE_CAP = 2**24


@dataclass
class KroneckerSum:
    """k-term Kronecker-product sum with double-precision factors."""

    ax: list[np.ndarray]
    ay: list[np.ndarray]
    scheme: BlockScheme

    def __post_init__(self):
        if len(self.ax) != len(self.ay):
            raise ValidationError("ax and ay must hold the same number of terms")
        if not self.ax:
            raise ValidationError("KroneckerSum needs at least one term")
        s = self.scheme
        self.ax = [np.ascontiguousarray(a, dtype=np.float64) for a in self.ax]
        self.ay = [np.ascontiguousarray(a, dtype=np.float64) for a in self.ay]
        for i, (a, b) in enumerate(zip(self.ax, self.ay)):
            if a.shape != (s.m1, s.n1):
                raise ValidationError(f"ax[{i}] has shape {a.shape}, expected {(s.m1, s.n1)}")
            if b.shape != (s.m2, s.n2):
                raise ValidationError(f"ay[{i}] has shape {b.shape}, expected {(s.m2, s.n2)}")

    @property
    def k(self) -> int:
        return len(self.ax)

    @property
    def shape(self) -> tuple[int, int]:
        return self.scheme.shape

    def apply(self, x: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        """Compute A @ x for a vectorized image x of length n1*n2."""
        s = self.scheme
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (s.cols,):
            raise ValidationError(f"apply expects a vector of length {s.cols}, got {x.shape}")
        xm = unvec(x, s.n2, s.n1)
        ym = np.zeros((s.m2, s.m1))
        for a, b in zip(self.ax, self.ay):
            ym += b @ xm @ a.T
        if counter is not None:
            counter.add_kp(s.m1, s.m2, s.n1, s.n2, self.k)
        return vec(ym)

    def apply_t(self, y: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
        """Compute A.T @ y for a vector y of length m1*m2."""
        s = self.scheme
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (s.rows,):
            raise ValidationError(f"apply_t expects a vector of length {s.rows}, got {y.shape}")
        ym = unvec(y, s.m2, s.m1)
        xm = np.zeros((s.n2, s.n1))
        for a, b in zip(self.ax, self.ay):
            xm += b.T @ ym @ a
        if counter is not None:
            counter.add_kp_transpose(s.m1, s.m2, s.n1, s.n2, self.k)
        return vec(xm)

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        """Form the dense matrix sum_i kron(ax_i, ay_i).

        Guarded by an entry-count cap; this exists for tests and small
        dense comparisons, not for production-size operators.
        """
        m, n = self.shape
        if m * n > cap:
            raise ValidationError(
                f"materializing a {m}x{n} matrix ({m * n} entries) exceeds the cap {cap}"
            )
        out = np.zeros((m, n))
        for a, b in zip(self.ax, self.ay):
            out += np.kron(a, b)
        return out


def assemble(svd: TruncatedSvd, scheme: BlockScheme) -> KroneckerSum:
    """Turn a truncated SVD of a rearranged matrix into a KroneckerSum.

    Each singular triplet (sigma, u, v) contributes the term
    kron(sigma * unvec(u), unvec(v)).  Factors are stored in double
    precision regardless of the precision the SVD was computed in.
    """
    if svd.u.shape[0] != scheme.m1 * scheme.n1 or svd.v.shape[0] != scheme.m2 * scheme.n2:
        raise ValidationError(
            f"SVD dimensions {svd.u.shape[0]}x{svd.v.shape[0]} do not match the "
            f"rearranged shape {scheme.rearranged_shape}"
        )
    ax = []
    ay = []
    u = svd.u.astype(np.float64)
    v = svd.v.astype(np.float64)
    sigma = svd.sigma.astype(np.float64)
    for i in range(svd.k):
        ax.append(sigma[i] * unvec(u[:, i], scheme.m1, scheme.n1))
        ay.append(unvec(v[:, i], scheme.m2, scheme.n2))
    return KroneckerSum(ax=ax, ay=ay, scheme=scheme)
