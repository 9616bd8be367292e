"""Relative blur estimation between two magnified, defocused observations.

For a less blurred observation ``g1`` and a more blurred ``g2`` related by the
warp factor ``s_w`` (see :mod:`dfdmag.warp`), the residual at relative blur
``sigma`` is::

    r(x) = g2(x) - (h_sigma * W g1)(x),      W g1 = scale_image(g1, 1 / s_w)

and the estimate is the ``sigma`` minimizing one of four penalties summed
over the valid interior:

========  ==========================
``lse``   ``r**2``
``abs``   ``|r|``
``da1``   ``1 - exp(-r**2)``
``da2``   ``1 - 1 / (1 + r**2)``
========  ==========================

The bounded penalties have their knee at ``|r| = 1``, so residuals are taken
in 8-bit gray levels (``intensity_scale=255``) before they are penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ._validation import check_image, check_option, check_same_shape, check_scalar
from .exceptions import ConfigurationError, DomainError, NumericError
from .imaging import convolve, crop_interior, gaussian_kernel
from .optics import (
    CameraConfig,
    OpticsConstants,
    SigmaPair,
    blur_relation,
    BlurRelation,
    depth_from_sigma,
    sigma_pair_from_relative,
)
from .warp import METHODS, WarpSpec, scale_image

OBJECTIVES = ("lse", "abs", "da1", "da2")
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _penalty(r: np.ndarray, kind: str) -> np.ndarray:
    if kind == "lse":
        return r * r
    if kind == "abs":
        return np.abs(r)
    if kind == "da1":
        return -np.expm1(-r * r)
    return 1.0 - 1.0 / (1.0 + r * r)


def objective_value(residual, kind: str = "lse") -> float:
    """Sum of the ``kind`` penalty over the unmasked residuals."""
    kind = check_option(kind, "kind", OBJECTIVES)
    r = np.ma.asarray(residual, dtype=np.float64).compressed()
    if r.size == 0:
        raise ConfigurationError("empty residual")
    # overflow surfaces as a non-finite value for the caller to report
    with np.errstate(over="ignore"):
        return float(np.sum(_penalty(r, kind)))


@dataclass(frozen=True)
class ObjectiveSpec:
    """Penalty kind, search grid over the relative blur and residual support.

    ``crop_margin=None`` means ``ceil(3 * sigma_hi) + 4``.
    """

    kind: str = "lse"
    sigma_lo: float = 0.05
    sigma_hi: float = 3.0
    sigma_step: float = 0.05
    refine: bool = True
    crop_margin: int | None = None
    method: str = "bilinear"
    boundary: str = "reflect"
    intensity_scale: float = 255.0
    tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "kind", check_option(self.kind, "kind", OBJECTIVES))
        object.__setattr__(self, "method", check_option(self.method, "method", METHODS))
        lo = check_scalar(self.sigma_lo, "sigma_lo", min_value=0.0)
        hi = check_scalar(self.sigma_hi, "sigma_hi")
        step = check_scalar(self.sigma_step, "sigma_step", min_value=0.0, include_min=False)
        if not lo < hi:
            raise ConfigurationError(f"sigma grid needs lo < hi, got [{lo}, {hi}]")
        if step > hi - lo:
            raise ConfigurationError(f"sigma step {step} exceeds the grid span {hi - lo}")
        check_scalar(self.intensity_scale, "intensity_scale", min_value=0.0, include_min=False)
        check_scalar(self.tol, "tol", min_value=0.0, include_min=False)
        if self.crop_margin is not None and (int(self.crop_margin) != self.crop_margin or self.crop_margin < 0):
            raise ConfigurationError(f"crop_margin must be a non-negative integer, got {self.crop_margin!r}")

    @property
    def grid(self) -> np.ndarray:
        n = int(math.floor((self.sigma_hi - self.sigma_lo) / self.sigma_step + 1e-9))
        return self.sigma_lo + self.sigma_step * np.arange(n + 1)

    @property
    def margin(self) -> int:
        if self.crop_margin is not None:
            return int(self.crop_margin)
        return math.ceil(3.0 * self.sigma_hi) + 4


@dataclass
class EstimateReport:
    sigma_r_hat: float
    objective_value: float
    objective_curve: np.ndarray = field(repr=False)
    warp_used: WarpSpec
    kind: str = "lse"

    @property
    def grid_minimizer(self) -> float:
        return float(self.objective_curve[np.argmin(self.objective_curve[:, 1]), 0])


class ResidualModel:
    """Precomputed warp of ``g1`` so the residual can be evaluated for many ``sigma``."""

    def __init__(self, g1, g2, s_w, boundary="reflect", crop_margin=0, method="bilinear"):
        g1 = check_image(g1, "g1")
        g2 = check_image(g2, "g2")
        check_same_shape(g1, g2)
        s_w = check_scalar(s_w, "s_w", min_value=0.0, include_min=False)
        self.warp = WarpSpec(1.0 / s_w, method)
        warped = scale_image(g1, self.warp, return_mask=True)
        self.source = warped.image
        self.target = g2
        self.boundary = boundary
        self.margin = int(crop_margin)
        try:
            valid = crop_interior(warped.valid, self.margin)
        except DomainError as exc:
            raise ConfigurationError(str(exc)) from exc
        if not valid.any():
            raise ConfigurationError("no valid pixels remain after cropping and warp masking")
        self.invalid = ~valid

    def __call__(self, sigma) -> np.ma.MaskedArray:
        pred = convolve(self.source, gaussian_kernel(sigma), self.boundary)
        r = crop_interior(self.target - pred, self.margin)
        return np.ma.masked_array(r, mask=self.invalid)


def residual_field(g1, g2, s_w, sigma_r, boundary="reflect", crop_margin=0, method="bilinear"):
    """``g2 - h_sigma_r * scale_image(g1, 1/s_w)`` over the cropped, valid interior."""
    sigma_r = check_scalar(sigma_r, "sigma_r", min_value=0.0)
    return ResidualModel(g1, g2, s_w, boundary, crop_margin, method)(sigma_r)


def golden_section(func, a, b, tol=1e-3):
    """Minimize a unimodal ``func`` on ``[a, b]``; returns ``(x, func(x))``.

    The bracket shrinks by the inverse golden ratio each step until it is
    narrower than ``tol``; the best evaluated point is returned.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
    return (c, fc) if fc <= fd else (d, fd)


def estimate_sigma_r(g1, g2, s_w: float = 1.0, spec: ObjectiveSpec | None = None) -> EstimateReport:
    """Grid search (plus optional golden-section refinement) for the relative blur."""
    spec = ObjectiveSpec() if spec is None else spec
    model = ResidualModel(g1, g2, s_w, spec.boundary, spec.margin, spec.method)

    def value(sigma):
        v = objective_value(model(sigma) * spec.intensity_scale, spec.kind)
        if not math.isfinite(v):
            raise NumericError(f"non-finite {spec.kind} objective at sigma={sigma}", sigma=sigma)
        return v

    grid = spec.grid
    values = np.array([value(s) for s in grid])
    i = int(np.argmin(values))
    best_sigma, best_value = float(grid[i]), float(values[i])
    curve = np.column_stack([grid, values])
    if spec.refine:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        x, fx = golden_section(value, lo, hi, spec.tol)
        if fx < best_value:
            best_sigma, best_value = float(x), float(fx)
    return EstimateReport(best_sigma, best_value, curve, model.warp, spec.kind)


@dataclass
class DepthEstimate:
    sigma_r: float
    sigma1: float
    sigma2: float
    depth: float
    ambiguous: bool


def pair_relation(cam1, cam2, consts=OpticsConstants(), pixel_pitch=1.0, side="far") -> BlurRelation:
    """Relation ``|sigma2| = alpha |sigma1| + beta`` for two shots of one depth.

    Built from ``blur_relation(cam2, cam1)`` (see its docstring). On the near
    side both signed blur parameters are negative and ``beta`` flips sign.
    """
    rel = blur_relation(cam2, cam1, consts, pixel_pitch)
    if check_option(side, "side", {"near", "far"}) == "near":
        rel = BlurRelation(rel.alpha, -rel.beta, rel.relative_scale)
    return rel


def estimate_depth_pair(
    g1,
    g2,
    cam1: CameraConfig,
    cam2: CameraConfig,
    consts: OpticsConstants = OpticsConstants(),
    spec: ObjectiveSpec | None = None,
    pixel_pitch: float = 1.0,
    side: str = "far",
) -> DepthEstimate:
    """Relative blur, then per-image blur, then depth, from one image pair.

    ``g1`` must come from ``cam1`` and be the less blurred observation. The
    warp factor is ``V2 / V1``.
    """
    rel = pair_relation(cam1, cam2, consts, pixel_pitch, side)
    report = estimate_sigma_r(g1, g2, rel.relative_scale, spec)
    pair: SigmaPair = sigma_pair_from_relative(report.sigma_r_hat, rel)
    depth = depth_from_sigma(cam1, pair.sigma1, consts, pixel_pitch, side)
    return DepthEstimate(report.sigma_r_hat, pair.sigma1, pair.sigma2, depth, pair.ambiguous)


def _as_pairs(X):
    if isinstance(X, tuple) and len(X) == 2 and np.ndim(X[0]) == 2:
        return [X]
    X = list(X) if not isinstance(X, np.ndarray) else X
    if isinstance(X, np.ndarray) and X.ndim == 3 and X.shape[0] == 2:
        return [X]
    return X


class RelativeBlurEstimator(RegressorMixin, BaseEstimator):
    """Estimate the relative blur of image pairs.

    ``X`` is a sequence of ``(g1, g2)`` pairs (or an array of shape
    ``(n_pairs, 2, height, width)``); :meth:`predict` returns one relative blur
    per pair. There is nothing to learn, so :meth:`fit` only validates the
    hyper-parameters. :meth:`score` is the negative mean absolute error
    against known relative blurs, so model selection tools can compare
    objectives.

    Parameters
    ----------
    scale : float
        Warp factor ``s_w = s1 / s2`` shared by all pairs.
    objective : {'lse', 'abs', 'da1', 'da2'}
    sigma_lo, sigma_hi, sigma_step : float
        Search grid in pixels.
    refine : bool
        Golden-section refinement around the best grid point.
    crop_margin : int or None
    method : {'bilinear', 'bicubic'}
        Interpolation used to warp ``g1``.
    intensity_scale : float
        Factor applied to residuals before penalizing them.
    """

    def __init__(
        self,
        scale=1.0,
        objective="lse",
        sigma_lo=0.05,
        sigma_hi=3.0,
        sigma_step=0.05,
        refine=True,
        crop_margin=None,
        method="bilinear",
        boundary="reflect",
        intensity_scale=255.0,
    ):
        self.scale = scale
        self.objective = objective
        self.sigma_lo = sigma_lo
        self.sigma_hi = sigma_hi
        self.sigma_step = sigma_step
        self.refine = refine
        self.crop_margin = crop_margin
        self.method = method
        self.boundary = boundary
        self.intensity_scale = intensity_scale

    def _spec(self) -> ObjectiveSpec:
        return ObjectiveSpec(
            kind=self.objective,
            sigma_lo=self.sigma_lo,
            sigma_hi=self.sigma_hi,
            sigma_step=self.sigma_step,
            refine=self.refine,
            crop_margin=self.crop_margin,
            method=self.method,
            boundary=self.boundary,
            intensity_scale=self.intensity_scale,
        )

    def fit(self, X=None, y=None):
        self.spec_ = self._spec()
        check_scalar(self.scale, "scale", min_value=0.0, include_min=False)
        return self

    def estimate(self, g1, g2) -> EstimateReport:
        """Full report for a single pair."""
        return estimate_sigma_r(g1, g2, self.scale, self._spec())

    def predict(self, X) -> np.ndarray:
        spec = self._spec()
        return np.array([estimate_sigma_r(g1, g2, self.scale, spec).sigma_r_hat for g1, g2 in _as_pairs(X)])

    def score(self, X, y, sample_weight=None):
        err = np.abs(self.predict(X) - np.asarray(y, dtype=np.float64))
        return -float(np.average(err, weights=sample_weight))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
