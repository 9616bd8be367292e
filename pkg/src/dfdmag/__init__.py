"""Relative blur estimation under magnification for depth from defocus."""

__version__ = "0.1.0"

from .estimate import (
    EstimateReport,
    ObjectiveSpec,
    RelativeBlurEstimator,
    estimate_depth_pair,
    estimate_sigma_r,
    objective_value,
    residual_field,
)
from .imaging import GaussianBlur, GaussianPsf, NoiseSpec, add_awgn, convolve, crop_interior, gaussian_kernel
from .optics import (
    BlurRelation,
    CameraConfig,
    OpticsConstants,
    blur_radius,
    blur_relation,
    blur_sigma,
    depth_from_sigma,
    relative_blur,
    relative_scale,
    sigma_pair_from_relative,
)
from .pgm import load_pgm, save_pgm
from .stats import (
    analytic_bias,
    build_conv_system,
    crlb,
    ls_blur_estimate,
    monte_carlo_bias,
    noise_diagnostics,
)
from .textures import generate_texture, make_texture
from .warp import ImageScaler, WarpSpec, interpolation_noise, scale_image, warp_pair_forward

__all__ = [
    "BlurRelation",
    "CameraConfig",
    "EstimateReport",
    "GaussianBlur",
    "GaussianPsf",
    "ImageScaler",
    "NoiseSpec",
    "ObjectiveSpec",
    "OpticsConstants",
    "RelativeBlurEstimator",
    "WarpSpec",
    "add_awgn",
    "analytic_bias",
    "blur_radius",
    "blur_relation",
    "blur_sigma",
    "build_conv_system",
    "convolve",
    "crlb",
    "crop_interior",
    "depth_from_sigma",
    "estimate_depth_pair",
    "estimate_sigma_r",
    "gaussian_kernel",
    "generate_texture",
    "interpolation_noise",
    "load_pgm",
    "ls_blur_estimate",
    "make_texture",
    "monte_carlo_bias",
    "noise_diagnostics",
    "objective_value",
    "relative_blur",
    "relative_scale",
    "residual_field",
    "save_pgm",
    "scale_image",
    "sigma_pair_from_relative",
    "warp_pair_forward",
]
