"""Conjugate gradient least squares.

Solves min_x ||op x - b||_2 by conjugate gradients on the normal
equations without ever forming op^T op.  The iteration is stopped by
the relative change ||step|| / ||x|| (measured from the second
iteration, when a previous iterate exists) or by an iteration cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericalError, ValidationError
from .metrics import FlopCounter
from .operators import as_operator
from .validation import as_vector

CGLS_CONVERGED = "converged"
CGLS_MAX_ITER = "max_iter"
CGLS_STALLED = "stalled"


@dataclass
class CglsConfig:
    i_max: int = 100
    tau: float = 1e-4

    def __post_init__(self):
        if self.i_max < 1:
            raise ValidationError("i_max must be >= 1")
        if self.tau < 0:
            raise ValidationError("tau must be >= 0")


@dataclass
class CglsResult:
    x: np.ndarray
    iters: int
    stop: str
    rc_history: list[float] = field(default_factory=list)
    resnorms: list[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.stop == CGLS_CONVERGED


def cgls_solve(
    op,
    b: np.ndarray,
    config: CglsConfig | None = None,
    x0: np.ndarray | None = None,
    counter: FlopCounter | None = None,
) -> CglsResult:
    """Run CGLS on ``op x = b``.

    Parameters
    ----------
    op : matrix or operator with apply/apply_t
    b : right-hand side, length op.shape[0]
    config : CglsConfig, optional
    x0 : optional warm-start iterate; the default starts from zero.
    counter : optional flop counter threaded through the operator.
    """
    op = as_operator(op)
    if config is None:
        config = CglsConfig()
    m, n = op.shape
    b = as_vector(b, "b", m)

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = as_vector(x0, "x0", n).copy()
        r = b - op.apply(x, counter=counter)
    f = op.apply_t(r, counter=counter)
    w = f.copy()
    tau_sq = float(f @ f)

    rc_history: list[float] = []
    resnorms: list[float] = [float(np.linalg.norm(r))]
    stop = CGLS_MAX_ITER
    iters = 0
    for iota in range(config.i_max):
        z = op.apply(w, counter=counter)
        z_sq = float(z @ z)
        if z_sq == 0.0:
            stop = CGLS_STALLED
            break
        mu = tau_sq / z_sq
        x_norm_pre = float(np.linalg.norm(x))
        step_norm = mu * float(np.linalg.norm(w))
        x = x + mu * w
        r = r - mu * z
        f = op.apply_t(r, counter=counter)
        tau_next = float(f @ f)
        if not np.isfinite(tau_next):
            raise NumericalError("CGLS produced non-finite residual quantities")
        delta = tau_next / tau_sq
        w = f + delta * w
        tau_sq = tau_next
        iters += 1
        resnorms.append(float(np.linalg.norm(r)))
        if iota >= 1:
            # Relative change is only meaningful once a previous
            # iterate exists; the first step starts from x = 0.
            rc = step_norm / x_norm_pre if x_norm_pre > 0 else np.inf
            rc_history.append(rc)
            if rc < config.tau:
                stop = CGLS_CONVERGED
                break

    return CglsResult(x=x, iters=iters, stop=stop, rc_history=rc_history, resnorms=resnorms)
