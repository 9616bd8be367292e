"""Closed-form test scenes.

Every scene is a function of continuous pixel coordinates, so a magnified
copy can be rasterized exactly instead of being interpolated. That gives the
ideal reference needed to isolate interpolation noise.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError

TEXTURE_KINDS = ("fractal", "smooth", "checker")
MIN_TEXTURE_SIZE = 32


class AnalyticImage:
    """Base class: a scene ``f(x, y)`` on a ``height x width`` pixel canvas.

    Subclasses implement :meth:`evaluate` on the tensor grid spanned by the
    1-D coordinate vectors ``x`` (columns) and ``y`` (rows).
    """

    def __init__(self, shape):
        height, width = (shape, shape) if np.ndim(shape) == 0 else shape
        self.shape = (int(height), int(width))

    @property
    def center(self):
        return ((self.shape[1] - 1) / 2.0, (self.shape[0] - 1) / 2.0)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rasterize(self, scale: float = 1.0, center=None, shape=None) -> np.ndarray:
        """Sample ``f(center + scale * (p - center))`` at every pixel ``p``."""
        height, width = self.shape if shape is None else shape
        cx, cy = self.center if center is None else center
        x = cx + scale * (np.arange(width, dtype=np.float64) - cx)
        y = cy + scale * (np.arange(height, dtype=np.float64) - cy)
        return self.evaluate(x, y)

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


class SinusoidTexture(AnalyticImage):
    """Sum of plane waves ``offset + gain * sum_k a_k cos(2 pi (u_k x + v_k y) + phi_k)``.

    Frequencies are in cycles per pixel. ``offset`` and ``gain`` are set so the
    unscaled raster spans ``[low, high]``.
    """

    def __init__(self, shape, freq_x, freq_y, amplitudes, phases, low=0.1, high=0.9):
        super().__init__(shape)
        self.freq_x = np.asarray(freq_x, dtype=np.float64)
        self.freq_y = np.asarray(freq_y, dtype=np.float64)
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self.phases = np.asarray(phases, dtype=np.float64)
        self.offset, self.gain = 0.0, 1.0
        raw = self.rasterize()
        lo, hi = float(raw.min()), float(raw.max())
        if hi - lo <= 0.0:
            raise DomainError("texture is flat")
        self.gain = (high - low) / (hi - lo)
        self.offset = low - lo * self.gain

    def evaluate(self, x, y):
        # cos(a + b) = cos a cos b - sin a sin b keeps this a pair of matrix products
        ax = 2.0 * np.pi * np.outer(self.freq_x, x)
        ay = 2.0 * np.pi * np.outer(self.freq_y, y) + self.phases[:, None]
        cy = self.amplitudes[:, None] * np.cos(ay)
        sy = self.amplitudes[:, None] * np.sin(ay)
        val = cy.T @ np.cos(ax) - sy.T @ np.sin(ax)
        return self.offset + self.gain * val


class FractalTexture(SinusoidTexture):
    """Random-phase plane-wave field with a ``1/f**2`` power spectrum.

    Radial frequencies are drawn log-uniformly in ``[1/size, max_frequency]``
    with equal amplitudes, which gives a spectral density proportional to
    ``1/f**2`` over the frequency plane. ``max_frequency`` stays below Nyquist
    even after magnifying by ``1/0.7``.
    """

    def __init__(self, size, seed=0, n_components=400, max_frequency=0.35):
        rng = np.random.default_rng(seed)
        shape = (size, size) if np.ndim(size) == 0 else size
        f_lo = 1.0 / max(shape)
        radial = np.exp(rng.uniform(math.log(f_lo), math.log(max_frequency), n_components))
        theta = rng.uniform(0.0, 2.0 * np.pi, n_components)
        phases = rng.uniform(0.0, 2.0 * np.pi, n_components)
        super().__init__(
            shape, radial * np.cos(theta), radial * np.sin(theta), np.ones(n_components), phases
        )


class SmoothTexture(SinusoidTexture):
    """Low-pass random field: a few dozen waves below ``max_frequency`` cycles/pixel."""

    def __init__(self, size, seed=0, n_components=24, max_frequency=0.08):
        rng = np.random.default_rng(seed)
        shape = (size, size) if np.ndim(size) == 0 else size
        radial = rng.uniform(1.0 / max(shape), max_frequency, n_components)
        theta = rng.uniform(0.0, 2.0 * np.pi, n_components)
        phases = rng.uniform(0.0, 2.0 * np.pi, n_components)
        amps = rng.uniform(0.5, 1.0, n_components)
        super().__init__(shape, radial * np.cos(theta), radial * np.sin(theta), amps, phases)


class CheckerTexture(AnalyticImage):
    """Checkerboard of square cells ``period / 2`` pixels wide, aligned with pixel 0.

    Cell ``(i, j) = (floor(y / half), floor(x / half))`` takes ``high`` when
    ``i + j`` is even and ``low`` otherwise.
    """

    def __init__(self, size, period=8, low=0.25, high=0.75):
        super().__init__(size)
        if period < 2 or period % 2:
            raise DomainError(f"checker period must be an even integer >= 2, got {period}")
        self.period = period
        self.low, self.high = low, high

    def evaluate(self, x, y):
        half = self.period / 2.0
        i = np.floor(np.asarray(y) / half).astype(np.int64)
        j = np.floor(np.asarray(x) / half).astype(np.int64)
        parity = (i[:, None] + j[None, :]) % 2
        return np.where(parity == 0, self.high, self.low)


class AffineTexture(AnalyticImage):
    """``c0 + cx * x + cy * y``; reproduced exactly by bilinear interpolation."""

    def __init__(self, shape, c0=0.2, cx=0.002, cy=0.001):
        super().__init__(shape)
        self.c0, self.cx, self.cy = c0, cx, cy

    def evaluate(self, x, y):
        return self.c0 + self.cx * np.asarray(x)[None, :] + self.cy * np.asarray(y)[:, None]


class ConstantTexture(AnalyticImage):
    def __init__(self, shape, value=0.5):
        super().__init__(shape)
        self.value = value

    def evaluate(self, x, y):
        return np.full((len(y), len(x)), float(self.value))


def make_texture(kind: str, size: int, seed: int = 0) -> AnalyticImage:
    """Analytic scene of the given ``kind`` (``fractal``, ``smooth`` or ``checker``)."""
    kind = str(kind).lower()
    if kind not in TEXTURE_KINDS:
        raise DomainError(f"texture kind must be one of {TEXTURE_KINDS}, got {kind!r}")
    if int(size) != size or size < MIN_TEXTURE_SIZE:
        raise DomainError(f"texture size must be an integer >= {MIN_TEXTURE_SIZE}, got {size!r}")
    size = int(size)
    if kind == "fractal":
        return FractalTexture(size, seed)
    if kind == "smooth":
        return SmoothTexture(size, seed)
    return CheckerTexture(size)


def generate_texture(kind: str, size: int, seed: int = 0) -> np.ndarray:
    """Deterministic ``size x size`` raster of :func:`make_texture`."""
    return make_texture(kind, size, seed).rasterize()
