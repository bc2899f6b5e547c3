"""
Axis-aligned ellipse primitives: conic conversion, point projection and the
rotation of signature points about their surface pivots
"""

import math
from typing import Tuple

import numpy as np

from app.errors import DegenerateConic, GeometryError, InvalidAngle, PointInsideEllipse
from app.models.geometry import ConicCoeffs, Ellipse, Point, ProjectionResult

_MAX_ROOT_STEPS = 200
_BOUNDARY_TOLERANCE = 1e-12
_SKEW_TOLERANCE = 1e-12
_AXIS_TOLERANCE = 1e-12


def conic_to_ellipse(c: ConicCoeffs) -> Ellipse:
    """
    Convert conic coefficients with B = 0 into center and semi-axes

    Raises:
        DegenerateConic: if the conic is rotated, a hyperbola/parabola, or imaginary
    """
    A, B, C, D, E, F = c.A, c.B, c.C, c.D, c.E, c.F
    if abs(B) > _SKEW_TOLERANCE * max(abs(A), abs(C)):
        raise DegenerateConic(f"rotated conic (B={B}) is not supported")
    if A * C <= 0.0:
        raise DegenerateConic(f"A*C = {A * C} does not describe an ellipse")
    if A < 0.0:
        A, C, D, E, F = -A, -C, -D, -E, -F

    s = D * D / (4.0 * A) + E * E / (4.0 * C) - F
    if s <= 0.0:
        raise DegenerateConic(f"conic has no real points (S = {s})")

    return Ellipse(
        center_x=-D / (2.0 * A),
        center_y=-E / (2.0 * C),
        a=math.sqrt(s / A),
        b=math.sqrt(s / C),
    )


def ellipse_to_conic(e: Ellipse, normalize: bool = True) -> ConicCoeffs:
    """
    Expand (x-x0)^2/a^2 + (y-y0)^2/b^2 = 1 into conic coefficients

    Args:
        e: ellipse to expand
        normalize: rescale so that 4AC = 1
    """
    a2, b2 = e.a * e.a, e.b * e.b
    x0, y0 = e.center_x, e.center_y
    coeffs = [b2, 0.0, a2, -2.0 * b2 * x0, -2.0 * a2 * y0, a2 * y0 * y0 + b2 * x0 * x0 - a2 * b2]
    if normalize:
        k = 1.0 / (2.0 * e.a * e.b)
        coeffs = [k * v for v in coeffs]
    return ConicCoeffs(A=coeffs[0], B=coeffs[1], C=coeffs[2], D=coeffs[3], E=coeffs[4], F=coeffs[5])


def _roots(r0: float, z0: np.ndarray, z1: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """
    Roots t of G(t) = (r0 z0 / (t + r0 - 1))^2 + (z1 / t)^2 - 1 for z1 > 0.

    G decreases on t > 0 and G(z1) >= 0, so bisection on [z1, hi] keeps a
    sign change; working in t = s + 1 avoids forming z1 - 1.
    """
    n0 = r0 * z0
    shift = r0 - 1.0
    lo = z1.copy()
    hi = np.where(inside, 1.0, np.hypot(n0, z1))
    for _ in range(_MAX_ROOT_STEPS):
        t = 0.5 * (lo + hi)
        if not np.any((t > lo) & (t < hi)):
            break
        p = n0 / (t + shift)
        q = z1 / t
        positive = p * p + q * q > 1.0
        lo = np.where(positive, t, lo)
        hi = np.where(positive, hi, t)
    return 0.5 * (lo + hi)


def _closest_in_quadrant(
    e0: float, e1: float, y0: np.ndarray, y1: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest boundary points for e0 >= e1 > 0 and queries with y0, y1 >= 0"""
    z0, z1 = y0 / e0, y1 / e1
    x0, x1 = np.empty_like(y0), np.empty_like(y1)

    # queries this close to the major axis are solved on it; the distance error stays below y1
    on_axis = z1 <= _AXIS_TOLERANCE
    numer0 = e0 * y0[on_axis]
    denom0 = e0 * e0 - e1 * e1
    within = numer0 < denom0
    ratio = np.where(within, numer0 / denom0 if denom0 > 0.0 else 0.0, 1.0)
    x0[on_axis] = e0 * ratio
    x1[on_axis] = e1 * np.sqrt(np.maximum(0.0, 1.0 - ratio * ratio))

    on_minor = ~on_axis & (y0 <= 0.0)
    x0[on_minor] = 0.0
    x1[on_minor] = e1

    general = ~on_axis & ~on_minor
    if np.any(general):
        g = z0[general] ** 2 + z1[general] ** 2 - 1.0
        r0 = (e0 / e1) ** 2
        t = _roots(r0, z0[general], z1[general], g < 0.0)
        x0[general] = np.where(g == 0.0, y0[general], r0 * y0[general] / (t + r0 - 1.0))
        x1[general] = np.where(g == 0.0, y1[general], y1[general] / t)
    return x0, x1


def nearest_boundary_points(
    e: Ellipse, px: np.ndarray, py: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nearest boundary points of the ellipse to arrays of query points, inside or outside

    Returns:
        (qx, qy, distance) arrays shaped like the queries
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    u, v = px - e.center_x, py - e.center_y
    swap = e.a < e.b
    if swap:
        e0, e1, w0, w1 = e.b, e.a, v, u
    else:
        e0, e1, w0, w1 = e.a, e.b, u, v

    x0, x1 = _closest_in_quadrant(e0, e1, np.abs(w0).ravel(), np.abs(w1).ravel())
    x0 = np.copysign(x0, w0.ravel()).reshape(px.shape)
    x1 = np.copysign(x1, w1.ravel()).reshape(px.shape)
    qu, qv = (x1, x0) if swap else (x0, x1)

    qx, qy = e.center_x + qu, e.center_y + qv
    return qx, qy, np.hypot(px - qx, py - qy)


def closest_boundary_point(e: Ellipse, p: Point) -> Tuple[float, float, float]:
    """
    Nearest point of the ellipse boundary to any point, inside or outside

    Returns:
        (qx, qy, distance)
    """
    qx, qy, distance = nearest_boundary_points(e, np.array([float(p[0])]), np.array([float(p[1])]))
    return float(qx[0]), float(qy[0]), float(distance[0])


def project_point(e: Ellipse, p: Point) -> ProjectionResult:
    """
    Project an external point onto the ellipse along the shortest distance

    Raises:
        PointInsideEllipse: if p is inside or on the boundary
    """
    px, py = float(p[0]), float(p[1])
    if e.level(px, py) <= 1.0 + _BOUNDARY_TOLERANCE:
        raise PointInsideEllipse(f"point {p} is not outside the ellipse")

    qx, qy, distance = closest_boundary_point(e, (px, py))
    angle = math.atan2(px - qx, qy - py)
    return ProjectionResult(nearest_point=(qx, qy), distance=distance, angle_from_vertical=angle)


def signature_distances(e: Ellipse, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Shortest distances and ray angles from surface pivots (x, 0) to the ellipse

    Returns:
        (distances, angles from the downward vertical, positive toward decreasing x)

    Raises:
        PointInsideEllipse: if a pivot is inside or on the boundary
    """
    xs = np.asarray(xs, dtype=float)
    surface = np.zeros_like(xs)
    level = ((xs - e.center_x) / e.a) ** 2 + (e.center_y / e.b) ** 2
    if np.any(level <= 1.0 + _BOUNDARY_TOLERANCE):
        raise PointInsideEllipse("a surface pivot is not outside the ellipse")

    qx, qy, distances = nearest_boundary_points(e, xs, surface)
    return distances, np.arctan2(xs - qx, qy)


def rotate_signature_point(x_i: float, y_i: float, cumulative_angle: float) -> Point:
    """
    Rotate the signature point (x_i, y_i) about its surface pivot (x_i, 0)

    Raises:
        InvalidAngle: if |angle| >= pi/2, which would lift the point above the surface
    """
    if abs(cumulative_angle) >= 0.5 * math.pi:
        raise InvalidAngle(f"rotation angle {cumulative_angle} rad reaches the surface")
    if y_i <= 0.0:
        raise GeometryError(f"signature depth must be positive, got {y_i}")
    return x_i - y_i * math.sin(cumulative_angle), y_i * math.cos(cumulative_angle)


def rotate_signature_points(xs: np.ndarray, ys: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotate every signature point about its pivot; returns an (n, 2) array"""
    xs, ys, angles = (np.asarray(v, dtype=float) for v in (xs, ys, angles))
    if np.any(np.abs(angles) >= 0.5 * math.pi):
        raise InvalidAngle("a rotation angle reaches the surface")
    if np.any(ys <= 0.0):
        raise GeometryError("signature depths must be positive")
    return np.column_stack((xs - ys * np.sin(angles), ys * np.cos(angles)))
