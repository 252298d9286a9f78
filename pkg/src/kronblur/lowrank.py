"""Low-rank truncated SVD engines.

Two engines compute a rank-k factorization of a dense matrix B (in
practice a rearranged blur operator): an enlarged Golub-Kahan
bidiagonalization (:func:`egkb`) that picks k on the fly from the decay
of the bidiagonal entries, and a randomized SVD (:func:`rsvd`) with
subspace (power) iterations for a known k.

Both run entirely in the precision of the input array: pass a float32
matrix to get a single-precision factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericalError, ValidationError
from .linalg import TruncatedSvd, eps_for, orthonormalize, precision_of, svd_small

# nu_1 has no predecessor; a huge sentinel keeps the rise test from
# ever firing against it.
NU_SENTINEL = 1e308

STOP_NU_ROSE = "nu_rose"
STOP_NU_BELOW_TOL = "nu_below_tol"
STOP_HIT_KMAX = "hit_kmax"
STOP_BREAKDOWN = "breakdown"

REORTH_ONE_SIDED = "one-sided"
REORTH_FULL = "full"


@dataclass
class EgkbConfig:
    """Settings for :func:`egkb`.

    ``k_max`` caps the chosen rank.  ``p`` extra iterations are run
    beyond the chosen rank to sharpen the truncated factors.  ``tau``
    and ``k_min`` parameterize the automatic rank rule.  ``reorth``
    selects one-sided (right vectors only) or full reorthogonalization;
    the default picks one-sided in double precision and full in single,
    where the left basis drifts too fast otherwise.  ``break_tol`` is
    the relative threshold declaring a recurrence vector collapsed;
    it defaults to sqrt(machine eps) of the working precision.
    """

    k_max: int
    p: int = 2
    tau: float = 1e-4
    k_min: int = 2
    reorth: str | None = None
    seed: int = 0
    break_tol: float | None = None
    keep_basis: bool = False

    def __post_init__(self):
        if self.k_max < 1:
            raise ValidationError("k_max must be >= 1")
        if self.p < 0:
            raise ValidationError("p must be >= 0")
        if self.k_min < 1:
            raise ValidationError("k_min must be >= 1")
        if self.reorth not in (None, REORTH_ONE_SIDED, REORTH_FULL):
            raise ValidationError(
                f"reorth must be {REORTH_ONE_SIDED!r} or {REORTH_FULL!r}, got {self.reorth!r}"
            )


@dataclass
class EgkbTrace:
    """Per-iteration scalars of a bidiagonalization run (1-based lists).

    ``nus[0]`` is a sentinel standing in for the undefined first value;
    ``nus[j-1] = sqrt(zetas[j-1] * zetas[j-2])`` afterwards.
    """

    alphas: list[float] = field(default_factory=list)
    ts: list[float] = field(default_factory=list)
    zetas: list[float] = field(default_factory=list)
    nus: list[float] = field(default_factory=list)
    chosen_k: int = 0
    k_p: int = 0
    stop_reason: str = ""
    breakdown: bool = False
    # Populated only under EgkbConfig.keep_basis, for diagnostics:
    # left basis S, right basis Q, and the bidiagonal projection C
    # satisfying b_mat @ Q = S @ C.
    s_basis: np.ndarray | None = None
    q_basis: np.ndarray | None = None
    c_mat: np.ndarray | None = None


@dataclass
class RsvdConfig:
    """Settings for :func:`rsvd`: target rank k, oversampling p, and
    the number q of power iterations applied to the sketch."""

    k: int
    p: int = 2
    q: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.p < 0:
            raise ValidationError("p must be >= 0")
        if self.q < 0:
            raise ValidationError("q must be >= 0")


def _rule_event(nu_prev: float, nu_j: float, tau: float) -> str | None:
    """Classify one step of the rank rule.

    A rise of nu over its predecessor truncates at the previous index;
    otherwise a dip below tau truncates at the current one.  The rise
    is checked first since it yields the smaller rank.
    """
    if nu_j > nu_prev:
        return "rise"
    if nu_j < tau:
        return "dip"
    return None


def auto_rank(nus, tau: float, k_min: int = 2, k_max: int | None = None) -> tuple[int, str]:
    """Scan a sequence of nu values and choose a truncation rank.

    Returns ``(k, reason)`` where k is the first index j-1 at which
    ``nus[j] > nus[j-1]``, or the first j with ``nus[j] < tau``,
    whichever comes first, floored at ``k_min`` (indices 1-based).  If
    neither event occurs the rule falls back to ``k_max`` (defaulting
    to ``len(nus)``).
    """
    nus = [float(v) for v in nus]
    if not nus:
        raise ValidationError("auto_rank needs at least one nu value")
    if k_max is None:
        k_max = len(nus)
    if nus[0] < tau:
        return max(1, k_min), STOP_NU_BELOW_TOL
    for j in range(2, len(nus) + 1):
        event = _rule_event(nus[j - 2], nus[j - 1], tau)
        if event == "rise":
            return max(j - 1, k_min), STOP_NU_ROSE
        if event == "dip":
            return max(j, k_min), STOP_NU_BELOW_TOL
    return k_max, STOP_HIT_KMAX


def _mgs_against(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for b in basis:
        v = v - (b @ v) * b
    return v


def egkb(
    b_mat: np.ndarray,
    config: EgkbConfig,
    y0: np.ndarray | None = None,
) -> tuple[TruncatedSvd, EgkbTrace]:
    """Enlarged Golub-Kahan bidiagonalization with automatic rank choice.

    Builds the lower-bidiagonal projection C of ``b_mat`` step by step,
    monitoring ``nu_j = sqrt(zeta_j * zeta_{j-1})`` with
    ``zeta_j = alpha_j * t_j``.  Once the rank rule fires at k, the
    recurrence is continued for ``p`` extra steps and the SVD of C is
    truncated back to k terms.  A collapsed recurrence vector ends the
    run early with the ``breakdown`` flag set; the factors computed up
    to that point are returned.

    Parameters
    ----------
    b_mat : array, shape (mbar, nbar)
        Matrix to factorize, float32 or float64.
    config : EgkbConfig
    y0 : array, optional
        Starting vector of length mbar; defaults to a seeded Gaussian
        draw in the working precision.

    Returns
    -------
    (TruncatedSvd, EgkbTrace)
    """
    b_mat = np.asarray(b_mat)
    if b_mat.ndim != 2:
        raise ValidationError("egkb expects a matrix")
    precision = precision_of(b_mat)
    dtype = b_mat.dtype
    mbar, nbar = b_mat.shape
    eps = eps_for(dtype)
    break_tol = config.break_tol if config.break_tol is not None else np.sqrt(eps)
    reorth = config.reorth
    if reorth is None:
        reorth = REORTH_FULL if precision == "single" else REORTH_ONE_SIDED

    rng = np.random.default_rng(config.seed)
    if y0 is None:
        y0 = rng.standard_normal(mbar).astype(dtype)
    else:
        y0 = np.asarray(y0, dtype=dtype)
        if y0.shape != (mbar,):
            raise ValidationError(f"y0 must have length {mbar}, got shape {y0.shape}")

    t1 = float(np.linalg.norm(y0))
    if t1 == 0.0:
        raise ValidationError("starting vector must be nonzero")
    s_vecs = [y0 / dtype.type(t1)]
    q_raw = b_mat.T @ s_vecs[0]
    alpha1 = float(np.linalg.norm(q_raw))
    if alpha1 == 0.0:
        raise NumericalError("operator annihilates the starting vector")
    q_vecs = [q_raw / dtype.type(alpha1)]

    trace = EgkbTrace()
    trace.alphas.append(alpha1)
    trace.ts.append(t1)
    trace.zetas.append(alpha1 * t1)
    trace.nus.append(NU_SENTINEL)

    fired_k: int | None = None
    fired_reason = ""
    breakdown = False
    t_break = False
    j = 1  # completed iterations

    def iter_limit() -> int:
        # One extra iteration beyond the columns we need certifies the
        # last column of C with its subdiagonal entry.
        if fired_k is not None:
            return fired_k + config.p + 1
        return config.k_max + 1

    while j < iter_limit():
        # s step of iteration j+1
        u = b_mat @ q_vecs[-1]
        s_raw = u - dtype.type(trace.alphas[-1]) * s_vecs[-1]
        if reorth == REORTH_FULL:
            s_raw = _mgs_against(s_raw, s_vecs)
        t_new = float(np.linalg.norm(s_raw))
        if t_new <= break_tol * float(np.linalg.norm(u)):
            breakdown = True
            t_break = True
            break
        s_new = s_raw / dtype.type(t_new)

        # q step of iteration j+1
        q_raw = b_mat.T @ s_new
        pre_norm = float(np.linalg.norm(q_raw))
        q_raw = q_raw - dtype.type(t_new) * q_vecs[-1]
        q_raw = _mgs_against(q_raw, q_vecs)
        alpha_new = float(np.linalg.norm(q_raw))
        if alpha_new <= break_tol * pre_norm:
            breakdown = True
            s_vecs.append(s_new)
            trace.ts.append(t_new)
            break
        q_vecs.append(q_raw / dtype.type(alpha_new))
        s_vecs.append(s_new)
        trace.ts.append(t_new)
        trace.alphas.append(alpha_new)
        zeta = alpha_new * t_new
        nu = float(np.sqrt(zeta * trace.zetas[-1]))
        trace.zetas.append(zeta)
        trace.nus.append(nu)
        j += 1

        if fired_k is None:
            event = _rule_event(trace.nus[-2], nu, config.tau)
            if event == "rise":
                fired_k = max(j - 1, config.k_min)
                fired_reason = STOP_NU_ROSE
            elif event == "dip":
                fired_k = max(j, config.k_min)
                fired_reason = STOP_NU_BELOW_TOL

    # Assemble C and the bases according to how the loop ended.
    if breakdown and t_break:
        # t collapsed while computing s_{j+1}: C is square j-by-j.
        k_p = j
        rows = j
    elif breakdown:
        # alpha collapsed while computing q_{j+1}: C is (j+1)-by-j and
        # the extra s vector certifies the last column.
        k_p = j
        rows = j + 1
    else:
        # Ran the full budget of j iterations; the last alpha/t pair
        # certifies column j-1, so k_p = j - 1 columns are usable.
        k_p = j - 1
        rows = j

    if fired_k is not None:
        chosen = min(fired_k, k_p)
        reason = fired_reason
    elif breakdown:
        chosen = k_p
        reason = STOP_BREAKDOWN
    else:
        chosen = min(config.k_max, k_p)
        reason = STOP_HIT_KMAX

    if chosen < 1 or k_p < 1:
        raise NumericalError("bidiagonalization broke down before producing any factors")

    c_mat = np.zeros((rows, k_p), dtype=dtype)
    for i in range(k_p):
        c_mat[i, i] = trace.alphas[i]
        if i + 1 < rows:
            c_mat[i + 1, i] = trace.ts[i + 1]

    s_basis = np.column_stack(s_vecs[:rows])
    q_basis = np.column_stack(q_vecs[:k_p])
    core = svd_small(c_mat)
    u_full = s_basis @ core.u
    v_full = q_basis @ core.v

    trace.chosen_k = chosen
    trace.k_p = k_p
    trace.stop_reason = reason
    trace.breakdown = breakdown
    if config.keep_basis:
        trace.s_basis = s_basis
        trace.q_basis = q_basis
        trace.c_mat = c_mat
    svd = TruncatedSvd(u_full[:, :chosen], core.sigma[:chosen], v_full[:, :chosen])
    return svd, trace


def rsvd(b_mat: np.ndarray, config: RsvdConfig) -> TruncatedSvd:
    """Randomized truncated SVD with q subspace iterations.

    Sketches the range of ``b_mat`` with a seeded Gaussian test matrix
    of k + p columns, re-orthonormalizing after every application of
    the operator or its transpose, then solves the small projected SVD
    and truncates to k terms.  When the matrix is wider than tall the
    computation runs on the transpose and the factors are swapped back.

    Raises
    ------
    RankDeficiencyError
        If the sketch loses rank during orthonormalization, e.g. when
        k + p exceeds the numerical rank of the matrix.
    """
    b_mat = np.asarray(b_mat)
    if b_mat.ndim != 2:
        raise ValidationError("rsvd expects a matrix")
    precision_of(b_mat)
    mbar, nbar = b_mat.shape
    if mbar < nbar:
        inner = rsvd(np.ascontiguousarray(b_mat.T), config)
        return TruncatedSvd(inner.v, inner.sigma, inner.u)

    k_p = config.k + config.p
    if k_p > nbar:
        raise ValidationError(
            f"k + p = {k_p} exceeds the smaller matrix dimension {nbar}"
        )
    rng = np.random.default_rng(config.seed)
    f = rng.standard_normal((nbar, k_p)).astype(b_mat.dtype)
    y = orthonormalize(b_mat @ f)
    for _ in range(config.q):
        z = orthonormalize(b_mat.T @ y)
        y = orthonormalize(b_mat @ z)
    h = y.T @ b_mat
    core = svd_small(h)
    u = y @ core.u
    if not np.all(np.isfinite(core.sigma)):
        raise NumericalError("randomized SVD produced non-finite singular values")
    return TruncatedSvd(u[:, : config.k], core.sigma[: config.k], core.v[:, : config.k])
