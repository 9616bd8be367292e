"""Thin-lens defocus geometry.

Lengths are in millimetres; blur parameters handed to the imaging code are in
pixels, converted through ``pixel_pitch`` (mm per pixel).

The blur radius of a point at depth ``D`` imaged by a lens of focal length
``F`` onto a sensor at distance ``V`` through an aperture of radius ``r`` is::

    R = r * V * (1/F - 1/V - 1/D)

``R`` is signed: positive behind the plane of focus (far side), negative in
front of it (near side). The Gaussian blur parameter is ``sigma = rho * |R|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from ._validation import check_option, check_scalar
from .exceptions import DegenerateCameraError, DepthRangeError, DomainError, InconsistentObservationError

_SIDES = {"near", "far"}


@dataclass(frozen=True)
class CameraConfig:
    """Thin-lens camera settings (all lengths in mm)."""

    aperture_radius: float
    sensor_distance: float
    focal_length: float

    def __post_init__(self):
        check_scalar(self.aperture_radius, "aperture_radius", min_value=0.0)
        check_scalar(self.sensor_distance, "sensor_distance", min_value=0.0, include_min=False)
        check_scalar(self.focal_length, "focal_length", min_value=0.0, include_min=False)

    @property
    def focus_distance(self) -> float:
        """Depth imaged sharply on the sensor (``inf`` when V == F)."""
        inv = 1.0 / self.focal_length - 1.0 / self.sensor_distance
        if inv <= 0.0:
            return math.inf
        return 1.0 / inv


@dataclass(frozen=True)
class OpticsConstants:
    """Proportionality between blur-circle radius and Gaussian blur parameter."""

    rho: float = 1.0

    def __post_init__(self):
        check_scalar(self.rho, "rho", min_value=0.0, include_min=False)


@dataclass(frozen=True)
class BlurRelation:
    """Linear inter-image blur relation ``sigma_b = alpha * sigma_a + beta`` and scale."""

    alpha: float
    beta: float
    relative_scale: float

    def __post_init__(self):
        check_scalar(self.alpha, "alpha", min_value=0.0, include_min=False)
        check_scalar(self.beta, "beta")
        check_scalar(self.relative_scale, "relative_scale", min_value=0.0, include_min=False)


class SigmaPair(NamedTuple):
    sigma1: float
    sigma2: float
    ambiguous: bool


def blur_radius(cam: CameraConfig, depth: float) -> float:
    """Signed blur-circle radius (mm) for a point at ``depth`` (mm, may be ``inf``)."""
    depth = check_scalar(depth, "depth", min_value=0.0, include_min=False)
    r, v, f = cam.aperture_radius, cam.sensor_distance, cam.focal_length
    return r * v * (1.0 / f - 1.0 / v - 1.0 / depth)


def blur_sigma(radius: float, consts: OpticsConstants = OpticsConstants(), pixel_pitch: float = 1.0) -> float:
    """Gaussian blur parameter in pixels, ``rho * |R| / pixel_pitch``."""
    radius = check_scalar(radius, "radius")
    pixel_pitch = check_scalar(pixel_pitch, "pixel_pitch", min_value=0.0, include_min=False)
    return consts.rho * abs(radius) / pixel_pitch


def relative_scale(v1: float, v2: float) -> float:
    """Relative magnification ``V1 / V2`` between two sensor distances."""
    v1 = check_scalar(v1, "V1", min_value=0.0, include_min=False)
    v2 = check_scalar(v2, "V2", min_value=0.0, include_min=False)
    return v1 / v2


def blur_relation(
    cam1: CameraConfig,
    cam2: CameraConfig,
    consts: OpticsConstants = OpticsConstants(),
    pixel_pitch: float = 1.0,
) -> BlurRelation:
    """Camera-derived ``(alpha, beta, s)``.

    ``alpha = r1 V1 / (r2 V2)``, ``beta = rho r1 V1 (1/F1 - 1/V1 - 1/F2 + 1/V2)``
    (converted to pixels by ``pixel_pitch``) and ``s = V1 / V2``.

    Substituting the lens equation shows these coefficients satisfy
    ``sigma(cam1) = alpha * sigma(cam2) + beta`` for signed blur parameters.
    The relation needed by :func:`sigma_pair_from_relative`, which expresses
    the second observation in terms of the first, is therefore
    ``blur_relation(cam2, cam1)``; its ``relative_scale`` is then ``V2 / V1``,
    the warp factor used throughout the estimation code.
    """
    pixel_pitch = check_scalar(pixel_pitch, "pixel_pitch", min_value=0.0, include_min=False)
    r1, v1, f1 = cam1.aperture_radius, cam1.sensor_distance, cam1.focal_length
    r2, v2, f2 = cam2.aperture_radius, cam2.sensor_distance, cam2.focal_length
    if r2 == 0.0 or r1 == 0.0:
        raise DegenerateCameraError("blur relation needs non-zero aperture radii")
    alpha = (r1 * v1) / (r2 * v2)
    beta = consts.rho * r1 * v1 * (1.0 / f1 - 1.0 / v1 - 1.0 / f2 + 1.0 / v2) / pixel_pitch
    return BlurRelation(alpha=alpha, beta=beta, relative_scale=v1 / v2)


def relative_blur(sigma1: float, sigma2: float, scale: float = 1.0) -> float:
    """Relative blur parameter ``sqrt(sigma2**2 - scale**2 * sigma1**2)``.

    ``scale`` is the warp factor ``s_w``; raises if the second observation is not
    the more blurred one after accounting for magnification.
    """
    val = sigma2 * sigma2 - scale * scale * sigma1 * sigma1
    if val < 0.0:
        if val > -1e-12:
            return 0.0
        raise InconsistentObservationError(
            f"sigma2={sigma2} is smaller than scale*sigma1={scale * sigma1}; no real relative blur"
        )
    return math.sqrt(val)


def relative_blur_roots(sigma_r: float, rel: BlurRelation, scale: float | None = None) -> list[float]:
    """All ``sigma1 >= 0`` with ``sigma2 = alpha sigma1 + beta >= 0`` and
    ``sigma2**2 - scale**2 sigma1**2 == sigma_r**2``, ascending."""
    sigma_r = check_scalar(sigma_r, "sigma_r", min_value=0.0)
    s = rel.relative_scale if scale is None else check_scalar(scale, "scale", min_value=0.0, include_min=False)
    alpha, beta = rel.alpha, rel.beta

    a = alpha * alpha - s * s
    b = 2.0 * alpha * beta
    c = beta * beta - sigma_r * sigma_r
    mag = max(abs(a), abs(b), abs(c), 1e-300)
    tol = 1e-12 * max(1.0, sigma_r, abs(beta))

    if abs(a) <= 1e-14 * mag:
        if abs(b) <= 1e-14 * mag:
            if abs(c) <= 1e-14 * mag:
                # every sigma1 fits; report the focused solution
                candidates = [0.0]
            else:
                candidates = []
        else:
            candidates = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if -1e-12 * b * b < disc < 0.0:
            disc = 0.0
        if disc < 0.0:
            candidates = []
        else:
            # cancellation-free form of the quadratic formula
            q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
            candidates = [q / a, c / q] if q != 0.0 else [0.0]

    roots = []
    for x in candidates:
        if x < -tol:
            continue
        x = 0.0 if x <= 0.0 else x
        if alpha * x + beta < -tol:
            continue
        if not any(abs(x - y) <= tol for y in roots):
            roots.append(x)
    return sorted(roots)


def sigma_pair_from_relative(sigma_r: float, rel: BlurRelation, scale: float | None = None) -> SigmaPair:
    """Recover ``(sigma1, sigma2)`` from a measured relative blur.

    Solves ``sigma_r**2 = (alpha sigma1 + beta)**2 - scale**2 sigma1**2`` with
    ``scale`` defaulting to ``rel.relative_scale``. When two admissible roots
    exist the smaller is returned and ``ambiguous`` is set.
    """
    roots = relative_blur_roots(sigma_r, rel, scale)
    if not roots:
        raise InconsistentObservationError(
            f"relative blur {sigma_r} has no non-negative solution for alpha={rel.alpha}, beta={rel.beta}"
        )
    sigma1 = roots[0]
    sigma2 = max(rel.alpha * sigma1 + rel.beta, 0.0)
    return SigmaPair(sigma1, sigma2, len(roots) > 1)


def depth_from_sigma(
    cam: CameraConfig,
    sigma: float,
    consts: OpticsConstants = OpticsConstants(),
    pixel_pitch: float = 1.0,
    side: str = "far",
) -> float:
    """Invert the thin-lens blur model for depth.

    ``side`` picks the sign of the blur radius lost by ``|R|``: ``"far"`` for
    points beyond the plane of focus, ``"near"`` for points in front of it.
    """
    sigma = check_scalar(sigma, "sigma", min_value=0.0)
    pixel_pitch = check_scalar(pixel_pitch, "pixel_pitch", min_value=0.0, include_min=False)
    side = check_option(side, "side", _SIDES)
    r, v, f = cam.aperture_radius, cam.sensor_distance, cam.focal_length
    radius = sigma * pixel_pitch / consts.rho
    if r == 0.0:
        if radius == 0.0:
            raise DomainError("a pinhole camera is in focus at every depth")
        raise DepthRangeError("a pinhole camera cannot produce blur")
    signed = radius if side == "far" else -radius
    inv_depth = 1.0 / f - 1.0 / v - signed / (r * v)
    if not inv_depth > 0.0:
        raise DepthRangeError(
            f"sigma={sigma} px on the {side} side maps to a depth at or beyond infinity (1/D={inv_depth})"
        )
    return 1.0 / inv_depth
