"""Magnification of images about a centre, and interpolation noise.

Convention: ``scale_image(img, s)`` produces ``out(p) = img(c + s (p - c))``,
i.e. the continuous image ``f(s x)`` about centre ``c``. ``s < 1`` magnifies
content and ``s > 1`` shrinks it.

A pair of observations of the same scene relates through the warp factor
``s_w = s1 / s2``. Image ``i`` shows ``f(s_i x)`` blurred by ``sigma_i``. With
the first observation as reference (``s1 = 1``), the second shows
``f(x / s_w)``. Resampling the first observation onto the second's grid is
``scale_image(g1, 1 / s_w)``, after which the residual relative blur is
``sqrt(sigma2**2 - s_w**2 sigma1**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_image, check_option, check_scalar
from .exceptions import DomainError
from .imaging import NoiseSpec, add_awgn, convolve
from .textures import AnalyticImage

METHODS = {"bilinear", "bicubic"}
_CATMULL_ROM_A = -0.5


@dataclass(frozen=True)
class WarpSpec:
    """Scale factor, interpolation method and centre ``(x0, y0)`` (``None``: image centre)."""

    scale: float
    method: str = "bilinear"
    center: tuple | None = None

    def __post_init__(self):
        check_scalar(self.scale, "scale", min_value=0.0, include_min=False)
        object.__setattr__(self, "method", check_option(self.method, "method", METHODS))


class WarpResult(NamedTuple):
    image: np.ndarray
    valid: np.ndarray


def _cubic_weight(d):
    a = _CATMULL_ROM_A
    d = np.abs(d)
    near = ((a + 2.0) * d - (a + 3.0)) * d * d + 1.0
    far = ((a * d - 5.0 * a) * d + 8.0 * a) * d - 4.0 * a
    return np.where(d <= 1.0, near, np.where(d < 2.0, far, 0.0))


def interpolation_matrix(n: int, scale: float, center: float, method: str = "bilinear"):
    """1-D resampling operator ``W`` (``n x n``) and validity of each output sample.

    Row ``p`` of ``W`` holds the interpolation taps for source coordinate
    ``center + scale (p - center)``. Taps beyond the ends are folded onto the
    edge sample (edge replication).
    """
    src = center + scale * (np.arange(n, dtype=np.float64) - center)
    valid = (src >= 0.0) & (src <= n - 1)
    base = np.floor(src).astype(np.int64)
    frac = src - base
    if method == "bilinear":
        taps = ((0, 1.0 - frac), (1, frac))
    else:
        taps = tuple((d, _cubic_weight(frac - d)) for d in (-1, 0, 1, 2))
    W = np.zeros((n, n))
    rows = np.arange(n)
    for offset, weight in taps:
        np.add.at(W, (rows, np.clip(base + offset, 0, n - 1)), weight)
    return W, valid


def scale_image(img, scale, method: str = "bilinear", center=None, return_mask: bool = False):
    """Resample ``img`` to ``img(c + scale (p - c))`` on the same canvas.

    ``scale`` may also be a :class:`WarpSpec`, in which case ``method`` and
    ``center`` come from it. With ``return_mask`` a :class:`WarpResult` is
    returned whose ``valid`` mask is ``False`` wherever the source sample fell
    outside the image support and was filled by edge replication.
    """
    if isinstance(scale, WarpSpec):
        spec = scale
    else:
        spec = WarpSpec(scale, method, center)
    img = check_image(img)
    height, width = img.shape
    cx, cy = ((width - 1) / 2.0, (height - 1) / 2.0) if spec.center is None else spec.center
    if not (0.0 <= cx <= width - 1 and 0.0 <= cy <= height - 1):
        raise DomainError(f"warp centre {(cx, cy)} lies outside the {width}x{height} image")
    Wy, vy = interpolation_matrix(height, spec.scale, cy, spec.method)
    Wx, vx = interpolation_matrix(width, spec.scale, cx, spec.method)
    out = Wy @ img @ Wx.T
    if return_mask:
        return WarpResult(out, vy[:, None] & vx[None, :])
    return out


def interpolation_noise(analytic: AnalyticImage, scale: float, method: str = "bilinear") -> np.ma.MaskedArray:
    """``f_s - f_is``: interpolated minus ideally magnified scene.

    ``f_s`` resamples the raster of ``analytic``; ``f_is`` rasterizes the
    analytic function at the scaled coordinates. Pixels whose source sample
    left the image support are masked.
    """
    raster = analytic.rasterize()
    warped = scale_image(raster, scale, method, return_mask=True)
    ideal = analytic.rasterize(scale=scale)
    return np.ma.masked_array(warped.image - ideal, mask=~warped.valid)


def warp_pair_forward(
    f,
    s_w: float,
    sigma1: float,
    sigma2: float,
    noise1: NoiseSpec | None = None,
    noise2: NoiseSpec | None = None,
    boundary: str = "reflect",
    method: str = "bicubic",
):
    """Simulate two observations of one scene: scale first, then blur, then noise.

    ``g1 = blur(f, sigma1) + n1`` and ``g2 = blur(f(x / s_w), sigma2) + n2``.
    ``f`` is either an :class:`AnalyticImage`, rasterized exactly at the
    magnified coordinates, or a raster image resampled with ``method``.
    """
    s_w = check_scalar(s_w, "s_w", min_value=0.0, include_min=False)
    if isinstance(f, AnalyticImage):
        f1 = f.rasterize()
        f2 = f1 if s_w == 1.0 else f.rasterize(scale=1.0 / s_w)
    else:
        f1 = check_image(f)
        f2 = f1 if s_w == 1.0 else scale_image(f1, 1.0 / s_w, method)
    g1 = convolve(f1, sigma1, boundary)
    g2 = convolve(f2, sigma2, boundary)
    if noise1 is not None:
        g1 = add_awgn(g1, noise1)
    if noise2 is not None:
        g2 = add_awgn(g2, noise2)
    return g1, g2


class ImageScaler(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`scale_image` for single images or stacks."""

    def __init__(self, scale=1.0, method="bilinear", center=None):
        self.scale = scale
        self.method = method
        self.center = center

    def fit(self, X, y=None):
        WarpSpec(self.scale, self.method, self.center)
        return self

    def transform(self, X):
        spec = WarpSpec(self.scale, self.method, self.center)
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            return scale_image(X, spec)
        if X.ndim == 3:
            return np.stack([scale_image(x, spec) for x in X])
        raise DomainError(f"expected an image or a stack of images, got {X.ndim}-D input")
