"""Estimator-style front ends.

These wrap the functional core in the familiar fit/transform/predict
shape: a transformer that learns a Kronecker-sum factorization of an
operator, and a solver that fits a restored image to an observation.
Hyperparameters follow scikit-learn conventions (stored verbatim in
``__init__``, fitted attributes trailing-underscored).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .cgls import CglsConfig
from .exceptions import ValidationError
from .kronop import KroneckerSum, assemble
from .linalg import cast
from .lowrank import EgkbConfig, RsvdConfig, egkb, rsvd
from .rearrange import BlockScheme, rearrange
from .splitbregman import SbConfig, sb_run
from .validation import as_matrix, as_vector


def _infer_scheme(shape: tuple[int, int]) -> BlockScheme:
    m, n = shape
    side = int(round(np.sqrt(n)))
    if m != n or side * side != n:
        raise ValidationError(
            f"cannot infer a block scheme for shape {shape}; pass scheme= explicitly"
        )
    return BlockScheme.square_image(side)


class KroneckerApproximator(BaseEstimator):
    """Learn a k-term Kronecker-sum approximation of a matrix.

    ``fit`` rearranges the matrix, runs the selected truncated-SVD
    engine, and assembles the factorized operator.  ``transform`` then
    applies that operator to each row of its input.

    Parameters
    ----------
    engine : {'egkb', 'rsvd'}
        Factorization engine.  The bidiagonalization engine chooses the
        rank automatically; the randomized engine needs ``k`` (when k
        is None it borrows the bidiagonalization estimate).
    k : int or None
        Target rank for the randomized engine.
    k_max, p, tau, k_min, reorth, q : engine knobs.
    precision : {'double', 'single'}
        Working precision of the factorization; assembled factors are
        always double.
    scheme : BlockScheme or None
        Block partition; inferred for square operators on square
        images when omitted.
    seed : int
        Seed for the starting vector / test matrix.

    Attributes
    ----------
    operator_ : KroneckerSum
    svd_ : TruncatedSvd of the rearranged matrix
    trace_ : EgkbTrace or None
    k_ : chosen rank
    scheme_ : BlockScheme actually used
    """

    def __init__(
        self,
        engine: str = "egkb",
        k: int | None = None,
        k_max: int = 20,
        p: int = 2,
        tau: float = 1e-4,
        k_min: int = 2,
        reorth: str | None = None,
        q: int = 1,
        precision: str = "double",
        scheme: BlockScheme | None = None,
        seed: int = 0,
    ):
        self.engine = engine
        self.k = k
        self.k_max = k_max
        self.p = p
        self.tau = tau
        self.k_min = k_min
        self.reorth = reorth
        self.q = q
        self.precision = precision
        self.scheme = scheme
        self.seed = seed

    def fit(self, X, y=None):
        a = as_matrix(X, "X")
        scheme = self.scheme if self.scheme is not None else _infer_scheme(a.shape)
        scheme.check_matrix(a)
        r_mat = cast(rearrange(a, scheme), self.precision)

        if self.engine not in ("egkb", "rsvd"):
            raise ValidationError(f"engine must be 'egkb' or 'rsvd', got {self.engine!r}")
        egkb_cfg = EgkbConfig(
            k_max=self.k_max,
            p=self.p,
            tau=self.tau,
            k_min=self.k_min,
            reorth=self.reorth,
            seed=self.seed,
        )
        self.trace_ = None
        if self.engine == "egkb":
            svd, trace = egkb(r_mat, egkb_cfg)
            self.trace_ = trace
        else:
            k = self.k
            if k is None:
                _, trace = egkb(r_mat, egkb_cfg)
                self.trace_ = trace
                k = trace.chosen_k
            svd = rsvd(r_mat, RsvdConfig(k=k, p=self.p, q=self.q, seed=self.seed))

        self.svd_ = svd
        self.k_ = svd.k
        self.scheme_ = scheme
        self.operator_ = assemble(svd, scheme)
        self.n_features_in_ = a.shape[1]
        return self

    def transform(self, X):
        """Apply the fitted operator to each row of X."""
        if not hasattr(self, "operator_"):
            raise ValidationError("KroneckerApproximator is not fitted yet")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"X has {X.shape[1]} features, the fitted operator expects {self.n_features_in_}"
            )
        return np.stack([self.operator_.apply(row) for row in X])

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


class SplitBregmanDeblurrer(BaseEstimator):
    """Fit a deblurred image to an observation under a known operator.

    ``fit(X, y)`` takes the blur operator as X (dense matrix or
    KroneckerSum) and the observed vectorized image as y, runs the
    split Bregman iteration, and exposes the restoration as ``x_``.

    Attributes
    ----------
    x_ : restored image, length n^2
    result_ : SbResult with per-iteration histories
    """

    def __init__(
        self,
        lam: float = 0.1,
        beta: float = 0.01,
        variant: str = "anisotropic",
        tau: float = 1e-3,
        l_max: int = 50,
        i_max: int = 100,
        tau_cgls: float = 1e-4,
        warm_start: bool = False,
    ):
        self.lam = lam
        self.beta = beta
        self.variant = variant
        self.tau = tau
        self.l_max = l_max
        self.i_max = i_max
        self.tau_cgls = tau_cgls
        self.warm_start = warm_start

    def _config(self) -> SbConfig:
        return SbConfig(
            lam=self.lam,
            beta=self.beta,
            variant=self.variant,
            tau=self.tau,
            l_max=self.l_max,
            cgls=CglsConfig(i_max=self.i_max, tau=self.tau_cgls),
            warm_start=self.warm_start,
        )

    def fit(self, X, y, x_true=None):
        op = X if isinstance(X, KroneckerSum) else as_matrix(X, "X")
        b = as_vector(y, "y")
        self.result_ = sb_run(op, b, self._config(), x_true=x_true)
        self.x_ = self.result_.x
        return self

    def predict(self, X=None):
        """Return the fitted restoration."""
        if not hasattr(self, "x_"):
            raise ValidationError("SplitBregmanDeblurrer is not fitted yet")
        return self.x_
