"""
Constrained algebraic ellipse fitting, the direct signature fit and the hyperbola baseline
"""

import logging
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import least_squares

from app.errors import DegenerateConic, DegenerateInput, FitFailed
from app.models.fitting import FitResult, HyperbolaFit, SignatureFit
from app.models.geometry import ConicCoeffs, Ellipse, Point
from app.services.geometry import conic_to_ellipse, nearest_boundary_points

logger = logging.getLogger(__name__)

# 4AC = 1 expressed on the reduced quadratic part (A, C)
_CONSTRAINT = np.array([[0.0, 2.0], [2.0, 0.0]])

_HYPERBOLA_MAX_EVALUATIONS = 200
_HYPERBOLA_INITIAL_RADIUS = 0.1
_SIGNATURE_MAX_EVALUATIONS = 200
_MIN_SEMI_AXIS = 1e-6


def _as_points(points: Sequence[Point]) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateInput(f"expected a sequence of (x, y) pairs, got shape {pts.shape}")
    return pts


def algebraic_distance_sum(conic: ConicCoeffs, points: Sequence[Point]) -> float:
    """Sum of squared algebraic distances of the points to the conic"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    values = conic.evaluate(pts[:, 0], pts[:, 1])
    return float(np.sum(values * values))


def geometric_rms(ellipse: Ellipse, points: Sequence[Point]) -> float:
    """Root-mean-square Euclidean distance of the points to the ellipse boundary"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    _, _, distances = nearest_boundary_points(ellipse, pts[:, 0], pts[:, 1])
    return float(np.sqrt(np.mean(distances * distances)))


def fit_ellipse(points: Sequence[Point]) -> FitResult:
    """
    Fit an axis-aligned ellipse minimizing the sum of squared algebraic
    distances subject to B = 0 and 4AC = 1

    The reduced problem over (A, C, D, E, F) is solved as a generalized
    eigenproblem of the (scatter, constraint) pair on normalized coordinates.

    Args:
        points: at least six (x, y) pairs spanning three distinct x values

    Returns:
        FitResult: conic, ellipse and residuals on the input points

    Raises:
        DegenerateInput: too few points, fewer than 3 distinct x, or collinear points
        FitFailed: no real-ellipse solution exists
    """
    pts = _as_points(points)
    n = len(pts)
    if n < 6:
        raise DegenerateInput(f"ellipse fit needs at least 6 points, got {n}")
    if len(np.unique(pts[:, 0])) < 3:
        raise DegenerateInput("ellipse fit needs at least 3 distinct x values")

    mean = pts.mean(axis=0)
    centered = pts - mean
    singular = np.linalg.svd(centered, compute_uv=False)
    if singular[-1] <= 1e-12 * singular[0]:
        raise DegenerateInput("points are collinear")

    scale = float(np.sqrt(np.mean(np.sum(centered * centered, axis=1))))
    u, v = centered[:, 0] / scale, centered[:, 1] / scale

    quadratic = np.column_stack((u * u, v * v))
    linear = np.column_stack((u, v, np.ones(n)))
    s1 = quadratic.T @ quadratic
    s2 = quadratic.T @ linear
    s3 = linear.T @ linear
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as e:
        raise FitFailed(f"singular linear scatter matrix: {e}") from e
    reduced = s1 + s2 @ t

    _, vectors = linalg.eig(reduced, _CONSTRAINT)
    best = None
    best_residual = np.inf
    for k in range(vectors.shape[1]):
        candidate = np.real(vectors[:, k])
        product = 4.0 * candidate[0] * candidate[1]
        if not np.all(np.isfinite(candidate)) or product <= 0.0:
            continue
        candidate = candidate / np.sqrt(product)
        if candidate[0] < 0.0:
            candidate = -candidate
        residual = float(candidate @ reduced @ candidate)
        if residual < best_residual:
            best, best_residual = candidate, residual
    if best is None:
        raise FitFailed("no eigenvector satisfies the ellipse constraint")

    A, C = best
    D, E, F = t @ best
    mx, my = mean
    conic = ConicCoeffs(
        A=A,
        B=0.0,
        C=C,
        D=-2.0 * A * mx + D * scale,
        E=-2.0 * C * my + E * scale,
        F=A * mx * mx + C * my * my - D * scale * mx - E * scale * my + F * scale * scale,
    )
    try:
        ellipse = conic_to_ellipse(conic)
    except DegenerateConic as e:
        raise FitFailed(f"fitted conic is not a real ellipse: {e}") from e

    return FitResult(
        conic=conic,
        ellipse=ellipse,
        algebraic_residual=algebraic_distance_sum(conic, pts),
        geometric_rms=geometric_rms(ellipse, pts),
    )


def _hyperbola_residuals(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0, y0, r = params
    return np.hypot(x - x0, y0) - r - y


def _hyperbola_jacobian(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0, y0, _ = params
    h = np.hypot(x - x0, y0)
    return np.column_stack((-(x - x0) / h, y0 / h, -np.ones_like(x)))


def fit_hyperbola_baseline(points: Sequence[Point]) -> HyperbolaFit:
    """
    Fit the circular-pipe hyperbola (y + r)^2 = (x - x0)^2 + y0^2 by
    nonlinear least squares on the depth residuals

    Raises:
        DegenerateInput: fewer than 5 points or a non-positive depth
        FitFailed: no convergence within 200 evaluations or a non-physical result
    """
    pts = _as_points(points)
    if len(pts) < 5:
        raise DegenerateInput(f"hyperbola fit needs at least 5 points, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0.0):
        raise DegenerateInput("signature depths must be positive")

    apex = int(np.argmin(y))
    initial = np.array([x[apex], y[apex] + _HYPERBOLA_INITIAL_RADIUS, _HYPERBOLA_INITIAL_RADIUS])
    result = least_squares(
        _hyperbola_residuals,
        initial,
        jac=_hyperbola_jacobian,
        args=(x, y),
        bounds=([-np.inf, 1e-9, 1e-9], [np.inf, np.inf, np.inf]),
        method="trf",
        max_nfev=_HYPERBOLA_MAX_EVALUATIONS,
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
    )
    if result.status <= 0:
        raise FitFailed(f"hyperbola fit did not converge: {result.message}")

    x0, y0, r = (float(v) for v in result.x)
    if not y0 > r > 0.0:
        raise FitFailed(f"hyperbola fit left the physical domain (y0={y0}, r={r})")

    logger.debug(f"Hyperbola baseline converged after {result.nfev} evaluations, r={r:.4f}")
    return HyperbolaFit(
        apex_x=x0,
        depth_to_center=y0,
        radius=r,
        residual=float(np.sum(result.fun * result.fun)),
    )


def _signature_residuals(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0, y0, a, b = params
    ellipse = Ellipse(center_x=x0, center_y=y0, a=a, b=b)
    _, _, distances = nearest_boundary_points(ellipse, x, np.zeros_like(x))
    return distances - y


def _signature_jacobian(params: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x0, y0, a, b = params
    ellipse = Ellipse(center_x=x0, center_y=y0, a=a, b=b)
    qx, qy, distances = nearest_boundary_points(ellipse, x, np.zeros_like(x))
    # unit vector from the foot point to the pivot
    distances = np.maximum(distances, 1e-15)
    ux = (x - qx) / distances
    uy = -qy / distances
    return np.column_stack((-ux, -uy, -ux * (qx - x0) / a, -uy * (qy - y0) / b))


def fit_signature_ellipse(points: Sequence[Point], initial: Ellipse) -> SignatureFit:
    """
    Fit the cross section whose pivot distances best match the recorded depths

    Minimizes sum_i (dist((x_i, 0), E) - y_i)^2 over center and semi-axes
    by trust-region least squares from `initial`, with the Jacobian of the
    shortest distance taken at the foot points.

    Args:
        points: signature points (x_i, y_i)
        initial: starting cross section, normally the best inversion iterate

    Returns:
        SignatureFit: the fitted ellipse and its RMS depth misfit

    Raises:
        DegenerateInput: fewer than 5 points or a non-positive depth
        FitFailed: the fit leaves the physical domain
    """
    pts = _as_points(points)
    if len(pts) < 5:
        raise DegenerateInput(f"signature fit needs at least 5 points, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(y <= 0.0):
        raise DegenerateInput("signature depths must be positive")

    start = np.array([initial.center_x, initial.center_y, initial.a, initial.b])
    result = least_squares(
        _signature_residuals,
        start,
        jac=_signature_jacobian,
        args=(x, y),
        bounds=([-np.inf, -np.inf, _MIN_SEMI_AXIS, _MIN_SEMI_AXIS], [np.inf, np.inf, np.inf, np.inf]),
        method="trf",
        x_scale="jac",
        max_nfev=_SIGNATURE_MAX_EVALUATIONS,
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    x0, y0, a, b = (float(v) for v in result.x)
    ellipse = Ellipse(center_x=x0, center_y=y0, a=a, b=b)
    if not ellipse.lies_below_surface:
        raise FitFailed(f"signature fit reaches the surface (center depth {y0}, b={b})")

    rms = float(np.sqrt(np.mean(result.fun * result.fun)))
    logger.debug(
        f"Signature fit stopped after {result.nfev} evaluations ({result.message}), "
        f"a={a:.5f} b={b:.5f} rms={rms:.6f}"
    )
    return SignatureFit(ellipse=ellipse, rms=rms, evaluations=int(result.nfev))
