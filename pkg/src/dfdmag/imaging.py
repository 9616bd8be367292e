"""Forward image formation: Gaussian PSFs, convolution, additive noise, cropping.

Images are plain 2-D ``float64`` arrays indexed ``[row, column]`` with
intensities nominally in ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_image, check_option, check_scalar
from .exceptions import DomainError

_BOUNDARY_MODES = {
    "replicate": "nearest",
    "reflect": "reflect",
}


@dataclass(frozen=True)
class GaussianPsf:
    """Sampled, truncated and renormalized isotropic Gaussian kernel.

    ``taps`` is the normalized 1-D profile; the 2-D ``weights`` are its outer
    product, which equals the renormalized 2-D Gaussian sampled on the
    ``(2 radius + 1)**2`` square.
    """

    sigma: float
    radius: int
    taps: np.ndarray = field(repr=False)

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.taps, self.taps)

    @property
    def size(self) -> int:
        return 2 * self.radius + 1


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean white Gaussian noise on the ``[0, 1]`` intensity scale."""

    variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        check_scalar(self.variance, "variance", min_value=0.0)

    @classmethod
    def from_8bit(cls, variance_255: float, seed: int = 0) -> "NoiseSpec":
        """Build a spec from a variance expressed on the 0-255 gray-level scale."""
        return cls(variance=variance_255 / 255.0**2, seed=seed)


def gaussian_kernel(sigma: float) -> GaussianPsf:
    """Gaussian PSF with standard deviation ``sigma`` pixels, truncated at ``ceil(3 sigma)``."""
    sigma = check_scalar(sigma, "sigma", min_value=0.0)
    if sigma == 0.0:
        return GaussianPsf(0.0, 0, np.ones(1))
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    # tiny sigma overflows to inf, which correctly zeroes the off-centre taps
    with np.errstate(over="ignore"):
        taps = np.exp(-0.5 * (x / sigma) ** 2)
    taps /= taps.sum()
    return GaussianPsf(sigma, radius, taps)


def convolve(img, psf, boundary: str = "reflect") -> np.ndarray:
    """Convolve ``img`` with a PSF, keeping the image size.

    ``psf`` is a :class:`GaussianPsf` (applied as two separable passes), a
    blur parameter in pixels, or an explicit odd-sized 2-D kernel array.
    ``boundary`` is ``"replicate"`` (edge pixels extended) or ``"reflect"``
    (half-sample symmetric mirror, which preserves the image sum).
    """
    img = check_image(img)
    mode = _BOUNDARY_MODES[check_option(boundary, "boundary", _BOUNDARY_MODES)]
    if not isinstance(psf, GaussianPsf) and np.ndim(psf) == 0:
        psf = gaussian_kernel(psf)
    if isinstance(psf, GaussianPsf):
        if psf.radius == 0:
            return img.copy()
        out = ndimage.convolve1d(img, psf.taps, axis=0, mode=mode)
        return ndimage.convolve1d(out, psf.taps, axis=1, mode=mode)
    kernel = np.asarray(psf, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise DomainError(f"explicit kernels must be 2-D with odd sides, got shape {kernel.shape}")
    return ndimage.convolve(img, kernel, mode=mode)


def add_awgn(img, spec: NoiseSpec) -> np.ndarray:
    """Add white Gaussian noise. Output is not clipped."""
    img = check_image(img)
    if spec.variance == 0.0:
        return img.copy()
    rng = np.random.default_rng(spec.seed)
    return img + rng.normal(0.0, math.sqrt(spec.variance), size=img.shape)


def crop_interior(img, margin: int) -> np.ndarray:
    """Central window with ``margin`` pixels removed on every side."""
    img = np.asanyarray(img)
    if int(margin) != margin or margin < 0:
        raise DomainError(f"margin must be a non-negative integer, got {margin!r}")
    margin = int(margin)
    if 2 * margin >= min(img.shape[:2]):
        raise DomainError(f"margin {margin} leaves nothing of a {img.shape[1]}x{img.shape[0]} image")
    if margin == 0:
        return img
    return img[margin:-margin, margin:-margin]


def rms(a, b=None) -> float:
    """Root-mean-square of ``a`` (or of ``a - b``), ignoring masked entries."""
    d = np.ma.asarray(a, dtype=np.float64)
    if b is not None:
        d = d - np.ma.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.ma.mean(d * d)))


class GaussianBlur(TransformerMixin, BaseEstimator):
    """Stateless transformer applying :func:`convolve` to an image or a stack of images."""

    def __init__(self, sigma=1.0, boundary="reflect"):
        self.sigma = sigma
        self.boundary = boundary

    def fit(self, X, y=None):
        check_scalar(self.sigma, "sigma", min_value=0.0)
        check_option(self.boundary, "boundary", _BOUNDARY_MODES)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        psf = gaussian_kernel(self.sigma)
        if X.ndim == 2:
            return convolve(X, psf, self.boundary)
        if X.ndim == 3:
            return np.stack([convolve(x, psf, self.boundary) for x in X])
        raise DomainError(f"expected an image or a stack of images, got {X.ndim}-D input")
