"""
Pipeline map lookups, survey planning and map revision from pipe estimates
"""

import json
import logging
import math
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.errors import EstimateIncomplete, MapFormatError, UnknownSegment
from app.models.geometry import Point
from app.models.pipemap import MapSegment, NearestSegment, PipeMap, SurveyLine
from app.models.signature import PipeEstimate
from app.services.eiia import reduce_bearing, undirected_difference

logger = logging.getLogger(__name__)

_TIE_DISTANCE = 1e-12
_NO_OP_BEARING_DEG = 1e-9


def bearing_of(segment: MapSegment) -> float:
    """Undirected bearing of a segment in [0, 180), north = +y = 0 deg, east = 90 deg"""
    dx = segment.end[0] - segment.start[0]
    dy = segment.end[1] - segment.start[1]
    return reduce_bearing(math.degrees(math.atan2(dx, dy)))


def _nearest_on_segment(segment: MapSegment, position: Point) -> Tuple[Point, float]:
    """Closest point of the segment to `position` and its parameter t in [0, 1]"""
    start = np.asarray(segment.start, dtype=float)
    direction = np.asarray(segment.end, dtype=float) - start
    t = float(np.dot(np.asarray(position, dtype=float) - start, direction) / np.dot(direction, direction))
    t = min(1.0, max(0.0, t))
    point = start + t * direction
    return (float(point[0]), float(point[1])), t


def distance_to_segment(segment: MapSegment, position: Point) -> float:
    (qx, qy), _ = _nearest_on_segment(segment, position)
    return math.hypot(position[0] - qx, position[1] - qy)


def map_bearing_near(pipe_map: PipeMap, position: Point) -> NearestSegment:
    """
    Find the mapped segment closest to a survey position

    Equidistant segments are resolved toward the smaller id and flagged as a tie.

    Raises:
        UnknownSegment: the map is empty
    """
    if not pipe_map.segments:
        raise UnknownSegment("the pipeline map has no segments")
    ranked = sorted(
        ((distance_to_segment(s, position), s.id, s) for s in pipe_map.segments),
        key=lambda item: (item[0], item[1]),
    )
    distance, _, segment = ranked[0]
    tie = len(ranked) > 1 and ranked[1][0] - distance <= _TIE_DISTANCE
    if tie:
        logger.warning(f"Segments {segment.id} and {ranked[1][1]} are equidistant from {position}")
    return NearestSegment(segment_id=segment.id, bearing=bearing_of(segment), distance=distance, tie=tie)


def revise(pipe_map: PipeMap, segment_id: str, estimate: PipeEstimate, survey: SurveyLine) -> PipeMap:
    """
    Re-orient a mapped segment to the estimated bearing

    The segment turns about its point nearest the survey position, keeping its
    length and its start-to-end sense; its radius becomes the estimated radius.
    Every other segment is carried over untouched and the input map is not modified.

    Raises:
        UnknownSegment: no segment has `segment_id`
        EstimateIncomplete: the estimate has no chosen bearing
    """
    segment = pipe_map.segment(segment_id)
    if segment is None:
        raise UnknownSegment(f"no segment with id {segment_id!r}")
    if estimate.chosen_bearing is None:
        raise EstimateIncomplete("the estimate has no chosen bearing; run bearing disambiguation first")

    target = estimate.chosen_bearing
    if undirected_difference(target, bearing_of(segment)) < _NO_OP_BEARING_DEG:
        revised = segment.model_copy(update={"radius_m": estimate.radius})
    else:
        pivot, t = _nearest_on_segment(segment, survey.position)
        dx = segment.end[0] - segment.start[0]
        dy = segment.end[1] - segment.start[1]
        length = math.hypot(dx, dy)

        # of the two directions along the target line, keep the one nearer the current heading
        heading = math.degrees(math.atan2(dx, dy))
        turn = abs(((target - heading + 180.0) % 360.0) - 180.0)
        direction = target if turn <= 90.0 else target + 180.0
        ux, uy = math.sin(math.radians(direction)), math.cos(math.radians(direction))

        revised = MapSegment(
            id=segment.id,
            start=(pivot[0] - t * length * ux, pivot[1] - t * length * uy),
            end=(pivot[0] + (1.0 - t) * length * ux, pivot[1] + (1.0 - t) * length * uy),
            radius_m=estimate.radius,
        )
        logger.info(
            f"Segment {segment.id} turned from {bearing_of(segment):.2f} to {target:.2f} deg "
            f"about ({pivot[0]:.3f}, {pivot[1]:.3f})"
        )

    return PipeMap(segments=[revised if s.id == segment_id else s for s in pipe_map.segments])


def plan_detecting_bearing(map_bearing: float, offset: float = 80.0) -> float:
    """
    Detecting direction to drive across a mapped pipe

    A deliberately non-perpendicular crossing keeps the two candidate pipe
    bearings distinguishable against the map.

    Raises:
        ValueError: unless 0 < offset < 90
    """
    if not 0.0 < offset < 90.0:
        raise ValueError(f"offset must be strictly between 0 and 90 degrees, got {offset}")
    return reduce_bearing(map_bearing + offset, 360.0)


def load_map(path: Union[str, Path]) -> PipeMap:
    """
    Read a map file {"segments": [{"id", "start", "end", "radius_m"}]}

    Raises:
        MapFormatError: unreadable file or invalid content
    """
    path = Path(path)
    try:
        return PipeMap.model_validate(json.loads(path.read_text()))
    except OSError as e:
        raise MapFormatError(f"cannot read map {path}: {e}") from e
    except (json.JSONDecodeError, ValidationError) as e:
        raise MapFormatError(f"invalid map {path}: {e}") from e


def save_map(pipe_map: PipeMap, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(pipe_map.model_dump(), indent=2, sort_keys=True) + "\n")
    return path
