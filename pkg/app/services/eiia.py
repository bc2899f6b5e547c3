"""
Ellipse Iterative Inversion: alternate constrained ellipse fitting and the
rotation of signature points about their surface pivots until the points
settle on the pipe's elliptical cross section
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from app.errors import DegenerateInput, FitFailed
from app.models.geometry import Ellipse
from app.models.signature import (
    BearingChoice,
    EiiaConfig,
    IterationResidual,
    Obliquity,
    PipeEstimate,
    SignaturePointSet,
)
from app.services.fitting import algebraic_distance_sum, fit_ellipse, fit_signature_ellipse
from app.services.geometry import ellipse_to_conic, rotate_signature_points, signature_distances

logger = logging.getLogger(__name__)

_TIE_TOLERANCE_DEG = 1e-9


def _depth_misfit(ellipse: Ellipse, xs: np.ndarray, ys: np.ndarray) -> Tuple[float, np.ndarray]:
    """RMS of y_i - dist((x_i, 0), E) and the ray angles toward E"""
    distances, angles = signature_distances(ellipse, xs)
    return float(np.sqrt(np.mean((ys - distances) ** 2))), angles


def run_eiia(pts: SignaturePointSet, cfg: Optional[EiiaConfig] = None) -> PipeEstimate:
    """
    Invert a downward-opening point set to the pipe's elliptical cross section

    Each iteration fits an ellipse to the current points, then turns every
    point about its pivot (x_i, 0) to the shortest-distance direction from
    the pivot to that ellipse. The residual of an iteration is the RMS
    mismatch between the recorded depths y_i and the pivot-to-ellipse
    distances, i.e. the distance of the updated points from the ellipse.

    Iteration stops at K fits, when the residual drops to the threshold, or
    when it changes by less than the stability epsilon. With `cfg.refine`
    the best iterate then seeds a direct minimization of the same residual,
    recorded as one more history entry when it lowers the residual.

    Args:
        pts: extracted signature points (at least 6)
        cfg: stopping parameters

    Returns:
        PipeEstimate: the recorded entry with the smallest residual, without bearings

    Raises:
        DegenerateInput: fewer than 6 points
        FitFailed: the first fit fails or reaches the surface
    """
    cfg = cfg or EiiaConfig()
    if pts.n < 6:
        raise DegenerateInput(f"inversion needs at least 6 points, got {pts.n}")

    xs, ys = pts.xs, pts.ys
    angles = np.asarray(pts.cumulative_angles, dtype=float)
    history: List[IterationResidual] = []
    iterates: List[Tuple[Ellipse, np.ndarray]] = []
    flags: List[str] = []
    stop_reason = "max_iterations"

    for k in range(1, cfg.max_iterations + 1):
        fit = fit_ellipse(rotate_signature_points(xs, ys, angles))
        ellipse = fit.ellipse
        if not ellipse.lies_below_surface:
            if not iterates:
                raise FitFailed("fitted cross section reaches the surface")
            logger.warning(f"Iteration {k}: fitted cross section reaches the surface, stopping")
            flags.append("surface_crossing")
            stop_reason = "surface_crossing"
            break

        rms, new_angles = _depth_misfit(ellipse, xs, ys)
        history.append(IterationResidual(algebraic_residual=fit.algebraic_residual, geometric_rms=rms))
        iterates.append((ellipse, new_angles))
        logger.debug(
            f"Iteration {k}: a={ellipse.a:.5f} b={ellipse.b:.5f} "
            f"D(P)={fit.algebraic_residual:.3e} rms={rms:.6f}"
        )

        if rms <= cfg.rms_threshold_m:
            stop_reason = "converged"
            break
        if k > 1:
            previous = history[-2].geometric_rms
            if rms > previous and "oscillation" not in flags:
                logger.warning(f"Iteration {k}: residual increased from {previous:.6f} to {rms:.6f}")
                flags.append("oscillation")
            if abs(rms - previous) < cfg.stability_epsilon_m:
                stop_reason = "stable"
                break
        angles = new_angles

    iterations_used = len(history)
    best = int(np.argmin([h.geometric_rms for h in history]))
    if cfg.refine:
        refined = _refine(pts, iterates[best][0], history[best].geometric_rms)
        if refined is None:
            flags.append("refine_rejected")
        else:
            history.append(refined[0])
            iterates.append(refined[1:])
            best = len(history) - 1

    ellipse, final_angles = iterates[best]
    obliquity = derive_angle_and_radius(ellipse)
    if obliquity.clamped:
        flags.append("alpha_clamped")

    logger.info(
        f"Inversion stopped ({stop_reason}) after {iterations_used} iterations; "
        f"best entry {best + 1}, alpha={math.degrees(obliquity.alpha):.2f} deg, "
        f"radius={obliquity.radius:.4f} m"
    )
    return PipeEstimate(
        ellipse=ellipse,
        alpha=obliquity.alpha,
        radius=obliquity.radius,
        iterations_used=iterations_used,
        best_iteration=best + 1,
        stop_reason=stop_reason,
        residual_history=history,
        inverted_points=[tuple(p) for p in rotate_signature_points(xs, ys, final_angles).tolist()],
        flags=flags,
    )


def _refine(
    pts: SignaturePointSet, seed: Ellipse, seed_rms: float
) -> Optional[Tuple[IterationResidual, Ellipse, np.ndarray]]:
    """Minimize the depth misfit from the best iterate; None when it does not improve"""
    try:
        fit = fit_signature_ellipse(pts.points, seed)
    except FitFailed as e:
        logger.warning(f"Refinement rejected: {e}")
        return None

    xs, ys = pts.xs, pts.ys
    rms, angles = _depth_misfit(fit.ellipse, xs, ys)
    if rms > seed_rms:
        logger.warning(f"Refinement rejected: residual {rms:.6f} above the best iterate's {seed_rms:.6f}")
        return None

    inverted = rotate_signature_points(xs, ys, angles)
    residual = IterationResidual(
        algebraic_residual=algebraic_distance_sum(ellipse_to_conic(fit.ellipse), inverted),
        geometric_rms=rms,
        refined=True,
    )
    logger.debug(f"Refinement: a={fit.ellipse.a:.5f} b={fit.ellipse.b:.5f} rms={rms:.6f}")
    return residual, fit.ellipse, angles


def derive_angle_and_radius(e: Ellipse) -> Obliquity:
    """
    Obliquity alpha = arcsin(b / a) and radius b of an inverted cross section

    When a < b (noise on a near-perpendicular scan) alpha is clamped to pi/2.
    """
    if e.a >= e.b:
        return Obliquity(alpha=math.asin(e.b / e.a), radius=e.b)
    logger.warning(f"Semi-axis a={e.a:.5f} below b={e.b:.5f}; clamping alpha to 90 deg")
    return Obliquity(alpha=0.5 * math.pi, radius=e.b, clamped=True)


def reduce_bearing(value: float, period: float = 180.0) -> float:
    """Reduce a bearing in degrees into [0, period)"""
    reduced = value % period
    return 0.0 if reduced >= period else reduced


def undirected_difference(first: float, second: float) -> float:
    """Angle in degrees between two undirected lines, in [0, 90]"""
    diff = abs(first - second) % 180.0
    return min(diff, 180.0 - diff)


def candidate_bearings(detecting_bearing: float, alpha: float) -> Tuple[float, float]:
    """The two pipe lines at obliquity alpha (radians) to the detecting direction"""
    alpha_deg = math.degrees(alpha)
    return reduce_bearing(detecting_bearing + alpha_deg), reduce_bearing(detecting_bearing - alpha_deg)


def disambiguate_bearing(detecting_bearing: float, alpha: float, map_bearing: float) -> BearingChoice:
    """
    Pick the candidate pipe bearing closer to the mapped one

    Args:
        detecting_bearing: GPR travel direction in degrees
        alpha: obliquity in radians
        map_bearing: bearing of the pipe on the existing map in degrees

    Returns:
        BearingChoice: candidates (detecting +/- alpha mod 180) and the chosen one
    """
    first, second = candidate_bearings(detecting_bearing, alpha)
    d_first = undirected_difference(first, map_bearing)
    d_second = undirected_difference(second, map_bearing)
    distinct = undirected_difference(first, second) > _TIE_TOLERANCE_DEG
    tie = distinct and abs(d_first - d_second) <= _TIE_TOLERANCE_DEG
    chosen = second if distinct and not tie and d_second < d_first else first
    return BearingChoice(chosen=chosen, candidates=(first, second), tie=tie)


def with_bearing(estimate: PipeEstimate, choice: BearingChoice) -> PipeEstimate:
    """Attach a bearing decision to an estimate"""
    flags = list(estimate.flags)
    if choice.tie:
        flags.append("bearing_tie")
    return estimate.model_copy(
        update={
            "candidate_bearings": choice.candidates,
            "chosen_bearing": choice.chosen,
            "flags": flags,
        }
    )
