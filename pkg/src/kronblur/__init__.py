"""Kronecker-sum approximation of blur operators and L1 deblurring.

The pipeline: rearrange a structured blur matrix, compute a truncated
SVD of the rearrangement (Golub-Kahan or randomized), assemble the
result as a sum of Kronecker products, and feed that fast operator to
a split Bregman solver for total-variation-style restoration.
"""

from .blurmodel import (
    BC_REFLEXIVE,
    BC_ZERO,
    NoiseSpec,
    Psf,
    add_noise,
    build_blur_matrix,
    make_test_image,
    synth_speckle_psf,
)
from .cgls import CglsConfig, CglsResult, cgls_solve
from .estimators import KroneckerApproximator, SplitBregmanDeblurrer
from .exceptions import (
    KronblurError,
    NumericalError,
    RankDeficiencyError,
    ValidationError,
)
from .kronop import KroneckerSum, assemble
from .linalg import TruncatedSvd, cast, fro_norm, orthonormalize, svd_small, unvec, vec
from .lowrank import (
    EgkbConfig,
    EgkbTrace,
    RsvdConfig,
    auto_rank,
    egkb,
    rsvd,
)
from .metrics import (
    CostModel,
    FlopCounter,
    SpeedupPrediction,
    isnr_db,
    predict_speedups,
    relative_change,
    relative_error,
    snr_db,
)
from .rearrange import BlockScheme, inverse_rearrange, rearrange
from .regularizers import AugmentedOp, aug_rhs, diff_x, diff_x_t, diff_y, diff_y_t
from .splitbregman import (
    SbConfig,
    SbResult,
    sb_run,
    shrink,
    sweep,
    update_d_aniso,
    update_d_iso,
    update_g,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedOp",
    "BC_REFLEXIVE",
    "BC_ZERO",
    "BlockScheme",
    "CglsConfig",
    "CglsResult",
    "CostModel",
    "EgkbConfig",
    "EgkbTrace",
    "FlopCounter",
    "KronblurError",
    "KroneckerApproximator",
    "KroneckerSum",
    "NoiseSpec",
    "NumericalError",
    "Psf",
    "RankDeficiencyError",
    "RsvdConfig",
    "SbConfig",
    "SbResult",
    "SpeedupPrediction",
    "SplitBregmanDeblurrer",
    "TruncatedSvd",
    "ValidationError",
    "add_noise",
    "assemble",
    "aug_rhs",
    "auto_rank",
    "build_blur_matrix",
    "cast",
    "cgls_solve",
    "diff_x",
    "diff_x_t",
    "diff_y",
    "diff_y_t",
    "egkb",
    "fro_norm",
    "inverse_rearrange",
    "isnr_db",
    "make_test_image",
    "orthonormalize",
    "predict_speedups",
    "rearrange",
    "relative_change",
    "relative_error",
    "rsvd",
    "sb_run",
    "shrink",
    "snr_db",
    "svd_small",
    "sweep",
    "synth_speckle_psf",
    "unvec",
    "update_d_aniso",
    "update_d_iso",
    "update_g",
    "vec",
]
