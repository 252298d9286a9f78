"""Quality metrics, flop accounting, and the predicted-speedup model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .validation import as_vector


def snr_db(b_true: np.ndarray, b: np.ndarray) -> float:
    """Signal-to-noise ratio of an observation, in dB.

    Returns ``inf`` when the observation equals the clean signal.
    """
    b_true = as_vector(np.ravel(b_true), "b_true")
    b = as_vector(np.ravel(b), "b", size=b_true.size)
    noise = np.linalg.norm(b_true - b)
    signal = np.linalg.norm(b_true)
    if noise == 0.0:
        return math.inf
    return float(10.0 * np.log10((signal / noise) ** 2))


def relative_error(x: np.ndarray, x_true: np.ndarray) -> float:
    x = np.ravel(x)
    x_true = np.ravel(x_true)
    denom = np.linalg.norm(x_true)
    if denom == 0.0:
        raise ValidationError("relative_error is undefined for a zero reference")
    return float(np.linalg.norm(x - x_true) / denom)


def isnr_db(x: np.ndarray, b: np.ndarray, x_true: np.ndarray) -> float:
    """Improvement in SNR of a restoration over the observed image, in dB."""
    x = np.ravel(x)
    b = np.ravel(b)
    x_true = np.ravel(x_true)
    err = np.linalg.norm(x - x_true)
    obs = np.linalg.norm(b - x_true)
    if err == 0.0 and obs == 0.0:
        return 0.0
    if err == 0.0:
        return math.inf
    if obs == 0.0:
        return -math.inf
    return float(20.0 * np.log10(obs / err))


def relative_change(x_new: np.ndarray, x_old: np.ndarray) -> float:
    denom = np.linalg.norm(np.ravel(x_old))
    if denom == 0.0:
        raise ValidationError("relative_change is undefined for a zero previous iterate")
    return float(np.linalg.norm(np.ravel(x_new) - np.ravel(x_old)) / denom)


class FlopCounter:
    """Accumulates multiply-add counts for operator applications.

    Two buckets are kept: applications that go through a Kronecker-sum
    factorization, and applications of a dense augmented system.  The
    counts follow the standard 2*m*n*p cost of an m-by-n times n-by-p
    matrix product.
    """

    def __init__(self):
        self.kp_apply = 0
        self.dense_apply = 0

    def add_kp(self, m1: int, m2: int, n1: int, n2: int, k: int) -> None:
        m = m1 * m2
        n = n1 * n2
        self.kp_apply += 2 * (m2 * n + m * n1) * k

    def add_kp_transpose(self, m1: int, m2: int, n1: int, n2: int, k: int) -> None:
        m = m1 * m2
        n = n1 * n2
        self.kp_apply += 2 * (n2 * m + n * m1) * k

    def add_dense(self, rows: int, cols: int) -> None:
        self.dense_apply += 2 * rows * cols

    def merge(self, other: "FlopCounter") -> None:
        self.kp_apply += other.kp_apply
        self.dense_apply += other.dense_apply

    def as_dict(self) -> dict:
        return {"kp_apply": int(self.kp_apply), "dense_apply": int(self.dense_apply)}

    def __repr__(self):
        return f"FlopCounter(kp_apply={self.kp_apply}, dense_apply={self.dense_apply})"


def kp_apply_flops(m1: int, m2: int, n1: int, n2: int, k: int) -> int:
    """Closed-form cost of one k-term Kronecker-sum application."""
    m = m1 * m2
    n = n1 * n2
    return 2 * (m2 * n + m * n1) * k


@dataclass
class CostModel:
    """Problem sizes entering the predicted speedup formulas.

    ``t`` is the row count of the augmented system, ``p_rows`` the row
    count of one difference operator, ``iota_total`` the total inner
    iteration count of a solve, and ``rho`` the factorization cost
    weight (1 for the bidiagonalization engine, 2 for the randomized
    one).
    """

    m: int
    n: int
    p_rows: int
    m1: int
    m2: int
    n1: int
    n2: int
    k: int
    k_p: int
    rho: float = 1.0
    iota_total: int = 0
    t: int = field(default=0)

    def __post_init__(self):
        if self.t == 0:
            self.t = self.m + 2 * self.p_rows
        if self.t != self.m + 2 * self.p_rows:
            raise ValidationError(
                f"augmented row count {self.t} != m + 2*p_rows = {self.m + 2 * self.p_rows}"
            )
        if self.m1 * self.m2 != self.m or self.n1 * self.n2 != self.n:
            raise ValidationError("block factor sizes do not multiply to the operator shape")
        if not 0 < self.k <= self.k_p:
            raise ValidationError(f"need 0 < k <= k_p, got k={self.k}, k_p={self.k_p}")


@dataclass
class SpeedupPrediction:
    """Predicted flop ratios of the dense path over the factorized path.

    ``alg_speedup`` follows the displayed amortized formula; the
    companion estimate with half that constant is kept alongside since
    both circulate for this pipeline.
    """

    sb_speedup: float
    alg_speedup: float | None
    alg_speedup_half_constant: float | None


def predict_speedups(model: CostModel) -> SpeedupPrediction:
    """Per-apply and whole-run speedups of the factorized operator.

    The per-apply ratio compares one dense augmented application
    against one Kronecker-sum application on a square scheme.  The
    whole-run ratio additionally amortizes the factorization cost over
    the ``iota_total`` inner iterations actually performed.
    """
    sb = (model.n + 2 * model.p_rows) / (2.0 * model.k * model.n1)
    if model.iota_total > 0:
        alg = (
            4.0 * (model.n + 2 * model.p_rows) * model.n * model.iota_total
            / (4.0 * model.rho * model.n**2 * model.k_p)
        )
        alg_half = 0.5 * alg
    else:
        alg = None
        alg_half = None
    return SpeedupPrediction(float(sb), alg, alg_half)
