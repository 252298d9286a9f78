"""Discrete blur operators and synthetic test data.

The operator is true 2-D convolution with an odd-sized point spread
function, materialized as a dense matrix acting on column-major
vectorized n-by-n images.  Out-of-range pixels are either dropped
(zero boundary) or reflected across the edge (reflexive boundary).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, ValidationError

BC_ZERO = "zero"
BC_REFLEXIVE = "reflexive"
BOUNDARY_CONDITIONS = (BC_ZERO, BC_REFLEXIVE)

# Dense blur matrices have n^2 rows; keep them desk-sized.
DENSE_SIDE_CAP = 200


@dataclass
class Psf:
    """Normalized point spread function with odd support.

    The kernel is copied, checked for odd dimensions and non-negative
    entries, and scaled to unit sum.  The center is the arithmetic
    center of the support.
    """

    kernel: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 2:
            raise ValidationError("PSF kernel must be 2-D")
        if k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
            raise ValidationError(f"PSF support must be odd in both dimensions, got {k.shape}")
        if np.any(k < 0):
            raise ValidationError("PSF kernel must be non-negative")
        total = k.sum()
        if total <= 0:
            raise ValidationError("PSF kernel must have positive mass")
        self.kernel = k / total

    @property
    def center(self) -> tuple[int, int]:
        return (self.kernel.shape[0] // 2, self.kernel.shape[1] // 2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.kernel.shape

    def separability_ratio(self) -> float:
        """Second-to-first singular value ratio of the kernel matrix.

        Zero means exactly separable (rank one).
        """
        s = np.linalg.svd(self.kernel, compute_uv=False)
        if s[0] == 0:
            raise NumericalError("PSF kernel has zero norm")
        return float(s[1] / s[0]) if s.size > 1 else 0.0


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise scaled to a relative level."""

    level: float
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValidationError("noise level must be >= 0")


def _reflect_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Symmetric (edge-including) reflection of indices into [0, n)."""
    out = np.where(idx < 0, -1 - idx, idx)
    out = np.where(out >= n, 2 * n - 1 - out, out)
    return out


def build_blur_matrix(psf: Psf, n: int, bc: str = BC_ZERO, cap: int = DENSE_SIDE_CAP) -> np.ndarray:
    """Dense n^2-by-n^2 convolution matrix for n-by-n images.

    Entry (row, col) couples output pixel row to input pixel col under
    the column-major vectorization index = c * n + r.  The convolution
    is the true one: the kernel is flipped relative to correlation.
    """
    if bc not in BOUNDARY_CONDITIONS:
        raise ValidationError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")
    if n < 1:
        raise ValidationError("image side must be >= 1")
    if n > cap:
        raise ValidationError(f"image side {n} exceeds the dense cap {cap}")
    kh, kw = psf.shape
    if bc == BC_REFLEXIVE and (kh > 2 * n - 1 or kw > 2 * n - 1):
        raise ValidationError("PSF support too large for single reflection at this image size")
    cu, cv = psf.center
    kernel = psf.kernel

    nn = n * n
    a = np.zeros((nn, nn))
    rr, cc = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    out_idx = (cc * n + rr).ravel()
    for u in range(kh):
        for v in range(kw):
            w = kernel[u, v]
            if w == 0.0:
                continue
            r_in = rr - u + cu
            c_in = cc - v + cv
            if bc == BC_ZERO:
                valid = (r_in >= 0) & (r_in < n) & (c_in >= 0) & (c_in < n)
                valid = valid.ravel()
                in_idx = (c_in * n + r_in).ravel()[valid]
                a[out_idx[valid], in_idx] += w
            else:
                r_in = _reflect_index(r_in, n)
                c_in = _reflect_index(c_in, n)
                in_idx = (c_in * n + r_in).ravel()
                a[out_idx, in_idx] += w
    return a


def _smooth_1d(field: np.ndarray, width: float) -> np.ndarray:
    """Separable Gaussian smoothing along both axes."""
    half = max(1, int(np.ceil(3 * width)))
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / width) ** 2)
    g /= g.sum()

    def smooth_row(row):
        # Slice the full convolution so the output length always
        # matches the row, even when the window is longer.
        return np.convolve(row, g)[half : half + row.size]

    out = np.apply_along_axis(smooth_row, 1, field)
    out = np.apply_along_axis(smooth_row, 0, out)
    return out


def synth_speckle_psf(
    size: int,
    roughness: float = 0.3,
    seed: int = 0,
    min_ratio: float = 0.1,
    max_tries: int = 32,
) -> Psf:
    """Random speckle-like PSF: smoothed complex-Gaussian intensity
    under a centered envelope.

    The result is normalized, odd-sized, and guaranteed non-separable
    (second-to-first singular value ratio above ``min_ratio``); the
    draw is retried with derived seeds until the ratio clears the bar.
    """
    if size < 3 or size % 2 == 0:
        raise ValidationError(f"PSF size must be odd and >= 3, got {size}")
    if not 0 < roughness <= 1:
        raise ValidationError("roughness must lie in (0, 1]")
    width = max(roughness * size / 2.0, 0.5)
    half = size // 2
    coords = np.arange(size, dtype=np.float64) - half
    rr, cc = np.meshgrid(coords, coords, indexing="ij")
    envelope = np.exp(-0.5 * (rr**2 + cc**2) / (size / 3.0) ** 2)

    for attempt in range(max_tries):
        rng = np.random.default_rng(seed + 7919 * attempt)
        re_part = _smooth_1d(rng.standard_normal((size, size)), width)
        im_part = _smooth_1d(rng.standard_normal((size, size)), width)
        intensity = (re_part**2 + im_part**2) * envelope
        if intensity.sum() <= 0:
            continue
        psf = Psf(intensity)
        if psf.separability_ratio() > min_ratio:
            return psf
    raise NumericalError(
        f"failed to draw a non-separable PSF in {max_tries} tries (size={size})"
    )


def make_test_image(n: int) -> np.ndarray:
    """Deterministic piecewise-constant n-by-n test image in [0, 1].

    Flat regions separated by sharp edges (two rectangles, a disk, and
    a bar), the kind of content gradient-sparsity restoration favors.
    """
    if n < 8:
        raise ValidationError(f"test image side must be >= 8, got {n}")
    img = np.full((n, n), 0.05)
    img[n // 8 : n // 2, n // 8 : n // 2] = 0.9
    img[n // 2 :, 2 * n // 3 :] = 0.45
    rr, cc = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    disk = (rr - 0.7 * n) ** 2 + (cc - 0.3 * n) ** 2 <= (0.16 * n) ** 2
    img[disk] = 0.7
    img[n // 12 : n // 6, :] = np.maximum(img[n // 12 : n // 6, :], 0.3)
    return img


def add_noise(b_true: np.ndarray, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Add white Gaussian noise with ||eta|| = level * ||b_true|| exactly.

    Returns the noisy vector and the noise realization.
    """
    b_true = np.asarray(b_true, dtype=np.float64)
    if spec.level == 0.0:
        return b_true.copy(), np.zeros_like(b_true)
    rng = np.random.default_rng(spec.seed)
    zeta = rng.standard_normal(b_true.shape)
    znorm = np.linalg.norm(zeta.ravel())
    if znorm == 0.0:
        raise NumericalError("degenerate noise draw")
    eta = spec.level * (np.linalg.norm(b_true.ravel()) / znorm) * zeta
    return b_true + eta, eta
