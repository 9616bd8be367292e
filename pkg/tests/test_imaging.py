import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from dfdmag.exceptions import DomainError
from dfdmag.imaging import (
    GaussianBlur,
    NoiseSpec,
    add_awgn,
    convolve,
    crop_interior,
    gaussian_kernel,
    rms,
)
from dfdmag.textures import make_texture


def test_kernel_zero_sigma_is_identity():
    psf = gaussian_kernel(0.0)
    assert psf.weights.shape == (1, 1)
    assert psf.weights[0, 0] == 1.0


def test_kernel_axial_ratio():
    w = gaussian_kernel(1.0).weights
    c = w.shape[0] // 2
    for dy, dx in ((0, 1), (1, 0), (0, -1), (-1, 0)):
        assert w[c, c] / w[c + dy, c + dx] == pytest.approx(math.exp(0.5), rel=1e-12)


def test_kernel_symmetry_and_sum():
    w = gaussian_kernel(0.7).weights
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(w, w[::-1, :])
    np.testing.assert_array_equal(w, w[:, ::-1])
    np.testing.assert_allclose(w, w.T, rtol=0, atol=0)


def test_kernel_matches_sampled_2d_gaussian():
    sigma = 1.3
    psf = gaussian_kernel(sigma)
    r = psf.radius
    y, x = np.mgrid[-r : r + 1, -r : r + 1]
    ref = np.exp(-(x**2 + y**2) / (2 * sigma**2))
    np.testing.assert_allclose(psf.weights, ref / ref.sum(), rtol=1e-12, atol=1e-15)


def test_kernel_rejects_negative_sigma():
    with pytest.raises(DomainError):
        gaussian_kernel(-0.1)


@given(st.floats(0.0, 10.0))
def test_kernel_normalization_and_radius(sigma):
    psf = gaussian_kernel(sigma)
    assert abs(psf.weights.sum() - 1.0) <= 1e-12
    assert np.all(psf.weights >= 0)
    assert psf.radius >= math.ceil(3 * sigma)


def test_convolve_identity_kernel_bit_identical(fractal128):
    np.testing.assert_array_equal(convolve(fractal128, 0.0), fractal128)
    np.testing.assert_array_equal(convolve(fractal128, np.ones((1, 1))), fractal128)


@pytest.mark.parametrize("boundary", ["reflect", "replicate"])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.5])
def test_convolve_constant_image(boundary, sigma):
    img = np.full((40, 50), 0.37)
    np.testing.assert_allclose(convolve(img, sigma, boundary), 0.37, rtol=0, atol=1e-15)


@pytest.mark.parametrize("boundary", ["reflect", "replicate"])
def test_separable_matches_direct_2d(fractal128, boundary):
    psf = gaussian_kernel(1.7)
    sep = convolve(fractal128, psf, boundary)
    direct = convolve(fractal128, psf.weights, boundary)
    np.testing.assert_allclose(sep, direct, rtol=0, atol=1e-12)


def test_interior_is_plain_discrete_convolution(rng):
    img = rng.random((30, 30))
    psf = gaussian_kernel(1.0)
    r = psf.radius
    out = convolve(img, psf)
    # independent oracle: explicit sum over kernel offsets
    ref = np.zeros_like(img)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ref[r:-r, r:-r] += psf.weights[dy + r, dx + r] * img[r - dy : 30 - r - dy, r - dx : 30 - r - dx]
    np.testing.assert_allclose(out[r:-r, r:-r], ref[r:-r, r:-r], rtol=0, atol=1e-13)


def test_replicate_boundary_extends_edges():
    img = np.zeros((9, 9))
    img[:, 0] = 1.0
    out = convolve(img, 1.0, "replicate")
    padded = np.pad(img, 3, mode="edge")
    ref = ndimage.correlate(padded, gaussian_kernel(1.0).weights, mode="constant")[3:-3, 3:-3]
    np.testing.assert_allclose(out, ref, atol=1e-14)


def test_convolve_rejects_bad_kernel_and_boundary(fractal128):
    with pytest.raises(DomainError):
        convolve(fractal128, np.ones((2, 2)))
    with pytest.raises(ValueError):
        convolve(fractal128, 1.0, boundary="wrap")


def test_semigroup_example(fractal128):
    seq = convolve(convolve(fractal128, 0.6), 0.8)
    direct = convolve(fractal128, 1.0)
    assert rms(crop_interior(seq - direct, 10)) <= 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0))
def test_semigroup_property(sigma_a, sigma_b):
    f = make_texture("fractal", 96, seed=3).rasterize()
    seq = convolve(convolve(f, sigma_a), sigma_b)
    direct = convolve(f, math.hypot(sigma_a, sigma_b))
    margin = math.ceil(3 * (sigma_a + sigma_b)) + 2
    assert rms(crop_interior(seq - direct, margin)) <= 1e-3


@pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
def test_mean_preservation_reflect(fractal128, sigma):
    assert abs(convolve(fractal128, sigma).mean() - fractal128.mean()) <= 1e-6


def test_awgn_zero_variance_identity(fractal128):
    np.testing.assert_array_equal(add_awgn(fractal128, NoiseSpec(0.0, 1)), fractal128)


def test_awgn_sample_variance():
    img = np.zeros((256, 256))
    spec = NoiseSpec.from_8bit(4.0, seed=7)
    assert spec.variance == pytest.approx(4 / 255**2)
    noisy = add_awgn(img, spec)
    assert np.var(noisy) == pytest.approx(spec.variance, rel=0.05)


def test_awgn_deterministic_and_unclipped():
    img = np.full((64, 64), 0.999)
    a = add_awgn(img, NoiseSpec(0.01, seed=5))
    b = add_awgn(img, NoiseSpec(0.01, seed=5))
    np.testing.assert_array_equal(a, b)
    assert a.max() > 1.0
    assert not np.array_equal(a, add_awgn(img, NoiseSpec(0.01, seed=6)))


def test_noise_spec_rejects_negative():
    with pytest.raises(DomainError):
        NoiseSpec(-1.0)


def test_crop_interior():
    img = np.arange(100.0).reshape(10, 10)
    assert crop_interior(img, 0) is img
    assert crop_interior(img, 2).shape == (6, 6)
    np.testing.assert_array_equal(crop_interior(crop_interior(img, 1), 2), crop_interior(img, 3))
    with pytest.raises(DomainError):
        crop_interior(img, 5)


def test_rms_respects_mask():
    a = np.ma.masked_array([3.0, 4.0, 100.0], mask=[False, False, True])
    assert rms(a) == pytest.approx(math.sqrt(12.5))


def test_gaussian_blur_transformer(fractal128):
    blur = GaussianBlur(sigma=1.2).fit(fractal128)
    np.testing.assert_array_equal(blur.transform(fractal128), convolve(fractal128, 1.2))
    stack = blur.transform(np.stack([fractal128, fractal128]))
    assert stack.shape == (2, 128, 128)
