"""
Tests for conic conversion, point projection and signature point rotation
"""

import math
import warnings

import numpy as np
import pytest

from app.errors import DegenerateConic, GeometryError, InvalidAngle, PointInsideEllipse
from app.models.geometry import ConicCoeffs, Ellipse
from app.services.geometry import (
    closest_boundary_point,
    conic_to_ellipse,
    ellipse_to_conic,
    nearest_boundary_points,
    project_point,
    rotate_signature_point,
    rotate_signature_points,
    signature_distances,
)


def test_conic_to_ellipse_recovers_center_and_axes():
    e = conic_to_ellipse(ConicCoeffs(A=1, B=0, C=4, D=0, E=-16, F=12))
    assert e.center == pytest.approx((0.0, 2.0))
    assert e.a == pytest.approx(2.0)
    assert e.b == pytest.approx(1.0)


def test_conic_to_ellipse_unit_circle():
    e = conic_to_ellipse(ConicCoeffs(A=1, C=1, F=-1))
    assert e.center == pytest.approx((0.0, 0.0))
    assert e.a == pytest.approx(1.0)
    assert e.b == pytest.approx(1.0)


def test_conic_to_ellipse_accepts_negated_coefficients():
    e = conic_to_ellipse(ConicCoeffs(A=-1, C=-4, E=16, F=-12))
    assert e.center == pytest.approx((0.0, 2.0))
    assert (e.a, e.b) == pytest.approx((2.0, 1.0))


@pytest.mark.parametrize(
    "coeffs",
    [
        dict(A=1, C=-1, F=-1),  # hyperbola
        dict(A=1, C=0, E=-1),  # parabola
        dict(A=1, C=1, F=1),  # no real points
        dict(A=1, B=0.5, C=1, F=-1),  # rotated
    ],
)
def test_conic_to_ellipse_rejects_non_ellipses(coeffs):
    with pytest.raises(DegenerateConic):
        conic_to_ellipse(ConicCoeffs(**coeffs))


def test_conic_requires_a_quadratic_part():
    with pytest.raises(ValueError):
        ConicCoeffs(A=0, C=0, D=1)


def test_ellipse_to_conic_expansion():
    e = Ellipse(center_x=0.0, center_y=2.0, a=1.0, b=0.5)
    raw = ellipse_to_conic(e, normalize=False).as_array()
    expected = np.array([0.25, 0.0, 1.0, 0.0, -4.0, 3.75])
    assert raw == pytest.approx(expected)

    normalized = ellipse_to_conic(e)
    assert 4.0 * normalized.A * normalized.C == pytest.approx(1.0)
    ratio = normalized.as_array()[[0, 2, 4, 5]] / expected[[0, 2, 4, 5]]
    assert np.allclose(ratio, ratio[0])


def test_conic_round_trip_through_ellipse():
    e = Ellipse(center_x=-0.7, center_y=1.9, a=0.45, b=0.3)
    back = conic_to_ellipse(ellipse_to_conic(e))
    assert back.center == pytest.approx(e.center)
    assert (back.a, back.b) == pytest.approx((e.a, e.b))


def test_boundary_points_evaluate_to_zero():
    e = Ellipse(center_x=0.2, center_y=1.4, a=0.6, b=0.25)
    conic = ellipse_to_conic(e)
    pts = e.sample_boundary(36)
    assert np.abs(conic.evaluate(pts[:, 0], pts[:, 1])).max() < 1e-12


def test_project_point_straight_up_from_apex():
    e = Ellipse(center_x=0.0, center_y=2.0, a=1.0, b=0.5)
    result = project_point(e, (0.0, 0.0))
    assert result.nearest_point == pytest.approx((0.0, 1.5))
    assert result.distance == pytest.approx(1.5)
    assert result.angle_from_vertical == pytest.approx(0.0)


def test_project_point_onto_circle_from_the_side():
    e = Ellipse(center_x=0.0, center_y=3.0, a=1.0, b=1.0)
    result = project_point(e, (4.0, 3.0))
    assert result.nearest_point == pytest.approx((1.0, 3.0))
    assert result.distance == pytest.approx(3.0)


def test_project_point_angle_sign_follows_side():
    e = Ellipse(center_x=0.0, center_y=1.5, a=0.6, b=0.3)
    left = project_point(e, (-0.5, 0.0))
    right = project_point(e, (0.5, 0.0))
    # pivot left of the center looks down and to the right
    assert left.angle_from_vertical < 0.0 < right.angle_from_vertical
    assert left.angle_from_vertical == pytest.approx(-right.angle_from_vertical)
    assert left.distance == pytest.approx(right.distance)


def test_project_point_rejects_inside_and_boundary_points():
    e = Ellipse(center_x=0.0, center_y=2.0, a=1.0, b=0.5)
    with pytest.raises(PointInsideEllipse):
        project_point(e, (0.0, 2.0))
    with pytest.raises(PointInsideEllipse):
        project_point(e, (1.0, 2.0))


def test_projection_matches_dense_polygon_and_is_normal():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 2.0 * np.pi, 200_000, endpoint=False)
    cos_t, sin_t = np.cos(t), np.sin(t)
    for _ in range(40):
        a = rng.uniform(0.1, 2.0)
        b = a / rng.uniform(1.0, 50.0)
        if rng.random() < 0.5:
            a, b = b, a
        e = Ellipse(center_x=rng.uniform(-1, 1), center_y=rng.uniform(-1, 1), a=a, b=b)

        phi = rng.uniform(0.0, 2.0 * np.pi)
        stretch = 1.0 + rng.uniform(0.01, 2.0)
        p = (e.center_x + stretch * a * math.cos(phi), e.center_y + stretch * b * math.sin(phi))

        result = project_point(e, p)
        vx = e.center_x + a * cos_t
        vy = e.center_y + b * sin_t
        brute = np.sqrt((vx - p[0]) ** 2 + (vy - p[1]) ** 2).min()
        spacing = max(a, b) * 2.0 * np.pi / len(t)
        assert result.distance <= brute + 1e-9
        assert result.distance >= brute - spacing

        qx, qy = result.nearest_point
        assert e.level(qx, qy) == pytest.approx(1.0, abs=1e-9)
        nx, ny = (qx - e.center_x) / a**2, (qy - e.center_y) / b**2
        dx, dy = p[0] - qx, p[1] - qy
        cross = (nx * dy - ny * dx) / (math.hypot(nx, ny) * math.hypot(dx, dy))
        assert abs(cross) < 1e-7


@pytest.mark.slow
def test_projection_brute_force_sweep():
    rng = np.random.default_rng(11)
    t = np.linspace(0.0, 2.0 * np.pi, 1_000_000, endpoint=False)
    cos_t, sin_t = np.cos(t), np.sin(t)
    for _ in range(1000):
        a = rng.uniform(0.1, 2.0)
        b = a / rng.uniform(1.0, 50.0)
        e = Ellipse(center_x=0.0, center_y=0.0, a=a, b=b)
        phi = rng.uniform(0.0, 2.0 * np.pi)
        stretch = 1.0 + rng.uniform(0.01, 2.0)
        p = (stretch * a * math.cos(phi), stretch * b * math.sin(phi))
        brute = np.sqrt((a * cos_t - p[0]) ** 2 + (b * sin_t - p[1]) ** 2).min()
        result = project_point(e, p)
        assert result.distance == pytest.approx(brute, abs=1e-5)

        qx, qy = result.nearest_point
        nx, ny = qx / a**2, qy / b**2
        dx, dy = p[0] - qx, p[1] - qy
        cross = (nx * dy - ny * dx) / (math.hypot(nx, ny) * math.hypot(dx, dy))
        assert abs(cross) < 1e-7


def test_closest_boundary_point_from_inside():
    e = Ellipse(center_x=0.0, center_y=0.0, a=2.0, b=1.0)
    qx, qy, distance = closest_boundary_point(e, (0.0, 0.2))
    assert (qx, qy) == pytest.approx((0.0, 1.0))
    assert distance == pytest.approx(0.8)


def test_rotate_signature_point_examples():
    assert rotate_signature_point(0.0, 1.0, 0.0) == pytest.approx((0.0, 1.0))
    assert rotate_signature_point(0.0, 1.0, math.pi / 6) == pytest.approx((-0.5, math.sqrt(3) / 2))


def test_rotation_preserves_distance_to_pivot():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, y = rng.uniform(-2, 2), rng.uniform(0.1, 3)
        theta = rng.uniform(-1.5, 1.5)
        qx, qy = rotate_signature_point(x, y, theta)
        assert math.hypot(qx - x, qy) == pytest.approx(y)
        assert qy > 0.0


@pytest.mark.parametrize("theta", [math.pi / 2, -math.pi / 2, 2.0])
def test_rotation_rejects_angles_reaching_the_surface(theta):
    with pytest.raises(InvalidAngle):
        rotate_signature_point(0.0, 1.0, theta)


def test_rotation_rejects_non_positive_depth():
    with pytest.raises(GeometryError):
        rotate_signature_point(0.0, 0.0, 0.1)


def test_project_point_with_center_offset_below_resolution():
    # a < b: the query sits 1e-17 m off the vertical axis of the ellipse
    e = Ellipse(center_x=1e-17, center_y=1.5, a=0.29, b=0.30)
    result = project_point(e, (0.0, 0.0))
    assert result.distance == pytest.approx(1.2)
    assert result.nearest_point == pytest.approx((0.0, 1.2))
    assert math.isfinite(result.angle_from_vertical)

    # a > b: the query sits 1e-17 m off the horizontal axis
    e = Ellipse(center_x=0.0, center_y=1e-17, a=0.30, b=0.29)
    result = project_point(e, (1.0, 0.0))
    assert result.distance == pytest.approx(0.7)
    assert result.nearest_point == pytest.approx((0.3, 0.0), abs=1e-12)


def test_project_point_accepts_numpy_scalars():
    e = Ellipse(center_x=1e-17, center_y=1.5, a=0.29, b=0.30)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        result = project_point(e, (np.float64(0.0), np.float64(0.0)))
    assert result.distance == pytest.approx(1.2)


def test_nearest_boundary_points_match_single_projections():
    e = Ellipse(center_x=0.3, center_y=1.1, a=0.25, b=0.4)
    px = np.array([-1.0, 0.0, 0.3, 0.9, 2.0])
    py = np.array([0.0, 0.5, 0.0, 1.3, 1.1])
    qx, qy, distance = nearest_boundary_points(e, px, py)
    for k in range(len(px)):
        expected = closest_boundary_point(e, (px[k], py[k]))
        assert (qx[k], qy[k], distance[k]) == pytest.approx(expected, abs=1e-12)


def test_signature_distances_match_project_point():
    e = Ellipse(center_x=0.0, center_y=1.5, a=0.6, b=0.3)
    xs = np.linspace(-2.0, 2.0, 21)
    distances, angles = signature_distances(e, xs)
    for x, distance, angle in zip(xs, distances, angles):
        result = project_point(e, (x, 0.0))
        assert distance == pytest.approx(result.distance, abs=1e-12)
        assert angle == pytest.approx(result.angle_from_vertical, abs=1e-12)


def test_signature_distances_reject_pivot_inside():
    e = Ellipse(center_x=0.0, center_y=0.2, a=0.5, b=0.3)
    with pytest.raises(PointInsideEllipse):
        signature_distances(e, np.array([-1.0, 0.0, 1.0]))


def test_rotate_signature_points_matches_single_rotation():
    xs = np.array([-0.4, 0.0, 0.7])
    ys = np.array([1.3, 1.2, 1.5])
    angles = np.array([-0.3, 0.0, 0.45])
    rotated = rotate_signature_points(xs, ys, angles)
    for k in range(3):
        assert tuple(rotated[k]) == pytest.approx(rotate_signature_point(xs[k], ys[k], angles[k]))
    with pytest.raises(InvalidAngle):
        rotate_signature_points(xs, ys, np.array([0.0, math.pi / 2, 0.0]))
    with pytest.raises(GeometryError):
        rotate_signature_points(xs, np.array([1.0, 0.0, 1.0]), angles)
