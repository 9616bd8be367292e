import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfdmag.estimate import (
    OBJECTIVES,
    ObjectiveSpec,
    estimate_depth_pair,
    estimate_sigma_r,
    golden_section,
    objective_value,
    pair_relation,
    residual_field,
)
from dfdmag.exceptions import ConfigurationError, InconsistentObservationError, NumericError
from dfdmag.imaging import convolve, rms
from dfdmag.optics import CameraConfig, OpticsConstants, blur_radius, blur_sigma, relative_blur
from dfdmag.warp import warp_pair_forward


@pytest.mark.parametrize("kind", OBJECTIVES)
def test_objective_zero_field(kind):
    assert objective_value(np.zeros((5, 5)), kind) == 0.0


@pytest.mark.parametrize("kind, expected", [("lse", 1.0), ("abs", 1.0), ("da1", 1 - math.exp(-1)), ("da2", 0.5)])
def test_objective_unit_residual(kind, expected):
    assert objective_value(np.array([1.0]), kind) == pytest.approx(expected, rel=1e-15)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50))
def test_bounded_penalties_at_most_pixel_count(values):
    r = np.array(values)
    for kind in ("da1", "da2"):
        assert 0.0 <= objective_value(r, kind) <= r.size


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_penalties_monotone_in_magnitude(a, b):
    lo, hi = sorted((a, b))
    for kind in OBJECTIVES:
        assert objective_value(np.array([lo]), kind) <= objective_value(np.array([-hi]), kind)


def test_objective_ignores_masked_and_rejects_empty():
    r = np.ma.masked_array([1.0, 100.0], mask=[False, True])
    assert objective_value(r, "lse") == 1.0
    with pytest.raises(ConfigurationError):
        objective_value(np.ma.masked_all((3,)), "lse")


def test_objective_spec_validation():
    with pytest.raises(ConfigurationError):
        ObjectiveSpec(sigma_lo=1.0, sigma_hi=0.5)
    with pytest.raises(ValueError):
        ObjectiveSpec(sigma_step=0.0)
    with pytest.raises(ValueError):
        ObjectiveSpec(kind="huber")
    spec = ObjectiveSpec()
    assert spec.grid[0] == 0.05 and spec.grid[-1] == pytest.approx(3.0) and len(spec.grid) == 60
    assert spec.margin == 13


def test_golden_section_parabola():
    x, fx = golden_section(lambda t: (t - 0.3719) ** 2 + 2.0, 0.0, 1.0, tol=1e-6)
    assert x == pytest.approx(0.3719, abs=1e-6)
    assert fx == pytest.approx(2.0)


def test_residual_identical_images_is_zero(fractal128):
    field = residual_field(fractal128, fractal128, 1.0, 0.0)
    assert np.all(field.compressed() == 0.0)


def test_residual_exact_model(fractal128):
    g2 = convolve(fractal128, 0.8)
    field = residual_field(fractal128, g2, 1.0, 0.8, crop_margin=0)
    assert rms(field) <= 1e-3
    assert np.max(np.abs(field.compressed())) < 1e-14


def test_residual_rejects_empty_support(fractal128):
    with pytest.raises(ConfigurationError):
        residual_field(fractal128, fractal128, 1.0, 0.5, crop_margin=64)


def test_identical_images_hit_lower_bound(fractal128):
    for kind in OBJECTIVES:
        spec = ObjectiveSpec(kind, sigma_lo=0.0, sigma_hi=2.0, sigma_step=0.05)
        assert estimate_sigma_r(fractal128, fractal128, 1.0, spec).sigma_r_hat == 0.0


def test_noiseless_unwarped_pair_matches_brute_force(fractal_scene256):
    g1, g2 = warp_pair_forward(fractal_scene256, 1.0, 0.7, 1.2)
    true = math.sqrt(1.44 - 0.49)
    report = estimate_sigma_r(g1, g2, 1.0, ObjectiveSpec("lse"))
    # independent oracle: exhaustive scan at step 0.001
    scan = np.arange(0.90, 1.05, 0.001)
    values = [objective_value(residual_field(g1, g2, 1.0, s, crop_margin=13), "lse") for s in scan]
    oracle = scan[int(np.argmin(values))]
    assert abs(report.sigma_r_hat - oracle) <= 2e-3
    assert abs(report.sigma_r_hat - true) <= 0.02


@pytest.mark.parametrize("kind", OBJECTIVES)
@pytest.mark.parametrize("sigma_r", [0.3, 0.75, 1.5])
def test_exact_pair_recovery(fractal_scene128, kind, sigma_r):
    f = fractal_scene128.rasterize()
    g1 = convolve(f, 0.5)
    g2 = convolve(g1, sigma_r)
    report = estimate_sigma_r(g1, g2, 1.0, ObjectiveSpec(kind))
    assert abs(report.sigma_r_hat - sigma_r) <= 0.01
    curve = report.objective_curve
    assert np.all(np.isfinite(curve))
    # exhaustive grid check: the global grid minimum sits at the true value
    assert report.grid_minimizer == pytest.approx(sigma_r, abs=1e-9)


@pytest.mark.parametrize("kind", ["lse", "abs"])
def test_argmin_invariant_to_common_gain(fractal_scene128, kind):
    g1, g2 = warp_pair_forward(fractal_scene128, 0.9, 0.7, 1.2)
    spec = ObjectiveSpec(kind, refine=False)
    base = estimate_sigma_r(g1, g2, 0.9, spec)
    scaled = estimate_sigma_r(3.0 * g1, 3.0 * g2, 0.9, spec)
    assert scaled.sigma_r_hat == base.sigma_r_hat
    factor = 9.0 if kind == "lse" else 3.0
    np.testing.assert_allclose(scaled.objective_curve[:, 1], factor * base.objective_curve[:, 1], rtol=1e-9)


def test_report_within_grid(fractal_scene128):
    g1, g2 = warp_pair_forward(fractal_scene128, 0.9, 0.7, 1.2)
    spec = ObjectiveSpec("da2", sigma_lo=0.2, sigma_hi=1.4, sigma_step=0.1)
    report = estimate_sigma_r(g1, g2, 0.9, spec)
    assert 0.2 <= report.sigma_r_hat <= 1.4
    assert report.warp_used.scale == pytest.approx(1 / 0.9)
    assert report.objective_curve.shape == (len(spec.grid), 2)


def test_deterministic(fractal_scene128):
    g1, g2 = warp_pair_forward(fractal_scene128, 0.9, 0.7, 1.2)
    a = estimate_sigma_r(g1, g2, 0.9, ObjectiveSpec("da1"))
    b = estimate_sigma_r(g1, g2, 0.9, ObjectiveSpec("da1"))
    assert a.sigma_r_hat == b.sigma_r_hat
    np.testing.assert_array_equal(a.objective_curve, b.objective_curve)


def test_non_finite_objective_names_sigma(fractal128):
    g2 = convolve(fractal128, 1.0)
    with pytest.raises(NumericError) as err:
        estimate_sigma_r(fractal128, g2, 1.0, ObjectiveSpec("lse", intensity_scale=1e300))
    assert err.value.sigma == pytest.approx(0.05)


def test_refinement_beats_grid(fractal_scene128):
    f = fractal_scene128.rasterize()
    g2 = convolve(f, 0.777)
    coarse = estimate_sigma_r(f, g2, 1.0, ObjectiveSpec("lse", refine=False))
    fine = estimate_sigma_r(f, g2, 1.0, ObjectiveSpec("lse"))
    assert abs(fine.sigma_r_hat - 0.777) < abs(coarse.sigma_r_hat - 0.777)
    assert abs(fine.sigma_r_hat - 0.777) <= 1e-3


def test_warped_pair_robust_beats_lse(fractal_scene256):
    g1, g2 = warp_pair_forward(fractal_scene256, 0.9, 0.7, 1.2)
    true = relative_blur(0.7, 1.2, 0.9)
    err = {k: abs(estimate_sigma_r(g1, g2, 0.9, ObjectiveSpec(k)).sigma_r_hat - true) for k in ("lse", "da1")}
    assert err["da1"] <= 0.05
    assert err["lse"] > err["da1"]


CONSTS = OpticsConstants(1.0)
PITCH = 0.1
CAM1 = CameraConfig(5.0, 53.0, 50.0)
CAM2 = CameraConfig(5.0, 54.0, 50.0)


def test_both_focused_gives_focus_distance(fractal128):
    cam = CameraConfig(5.0, 53.0, 50.0)
    other = CameraConfig(2.5, 53.0, 50.0)
    spec = ObjectiveSpec(sigma_lo=0.0, sigma_hi=2.0)
    est = estimate_depth_pair(fractal128, fractal128, cam, other, CONSTS, spec, PITCH)
    assert est.sigma_r == 0.0
    assert est.depth == pytest.approx(cam.focus_distance, rel=1e-12)


@pytest.mark.parametrize("depth", [1000.0, 1500.0, 2000.0])
def test_depth_round_trip(fractal_scene256, depth):
    s1 = blur_sigma(blur_radius(CAM1, depth), CONSTS, PITCH)
    s2 = blur_sigma(blur_radius(CAM2, depth), CONSTS, PITCH)
    rel = pair_relation(CAM1, CAM2, CONSTS, PITCH)
    g1, g2 = warp_pair_forward(fractal_scene256, rel.relative_scale, s1, s2)
    est = estimate_depth_pair(g1, g2, CAM1, CAM2, CONSTS, ObjectiveSpec(method="bicubic"), PITCH)
    assert est.depth == pytest.approx(depth, rel=0.05)


def test_inconsistent_observation_surfaces(fractal128):
    # identical images give sigma_r = 0, impossible when beta > 0 and alpha >= s_w
    spec = ObjectiveSpec(sigma_lo=0.0, sigma_hi=2.0)
    rel = pair_relation(CAM1, CAM2, CONSTS, PITCH)
    assert rel.beta > 0 and rel.alpha >= rel.relative_scale
    with pytest.raises(InconsistentObservationError):
        estimate_depth_pair(fractal128, fractal128, CAM1, CAM2, CONSTS, spec, PITCH)
