"""Input validation helpers shared by the public functions and estimators."""

import math
import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError


def check_image(img, name="image", min_size=1):
    """Return ``img`` as a finite 2-D float64 array.

    Masked arrays are accepted and filled with 0 (callers that care about the
    mask keep their own copy). Raises :class:`DomainError` for empty or
    non-finite input.
    """
    if isinstance(img, np.ma.MaskedArray):
        img = img.filled(0.0)
    try:
        arr = check_array(
            img,
            dtype=np.float64,
            ensure_2d=True,
            ensure_min_samples=min_size,
            ensure_min_features=min_size,
            input_name=name,
        )
    except ValueError as exc:
        raise DomainError(f"{name}: {exc}") from exc
    return arr


def check_same_shape(a, b, names=("g1", "g2")):
    if a.shape != b.shape:
        raise DomainError(
            f"{names[0]} and {names[1]} must have the same shape, got {a.shape} and {b.shape}"
        )


def check_scalar(value, name, *, min_value=None, max_value=None, include_min=True):
    """Validate a real scalar and return it as ``float``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value):
        raise DomainError(f"{name} must not be NaN")
    if min_value is not None:
        if include_min and value < min_value:
            raise DomainError(f"{name} must be >= {min_value}, got {value}")
        if not include_min and value <= min_value:
            raise DomainError(f"{name} must be > {min_value}, got {value}")
    if max_value is not None and value > max_value:
        raise DomainError(f"{name} must be <= {max_value}, got {value}")
    return value


def check_option(value, name, options):
    key = str(value).lower()
    if key not in options:
        raise DomainError(f"{name} must be one of {sorted(options)}, got {value!r}")
    return key
