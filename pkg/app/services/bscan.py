"""
B-scan handling: time-to-depth conversion, preprocessing to a binary image,
downward-opening cluster detection and signature point extraction
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy import ndimage

from app.errors import BScanFormatError, ClusterTooNarrow
from app.models.bscan import BinaryImage, BScanGrid, BScanHeader, Cluster, Segment
from app.models.signature import SignaturePointSet

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT_M_PER_NS = 0.2998
MIN_POINTS = 6

# 8-connectivity for despeckling
_NEIGHBOURHOOD = np.ones((3, 3), dtype=bool)


def metres_per_sample(sample_interval_ns: float, relative_permittivity: float) -> float:
    """Two-way depth covered by one sample: v * dt / 2 with v = c / sqrt(eps_r)"""
    velocity = SPEED_OF_LIGHT_M_PER_NS / math.sqrt(relative_permittivity)
    return velocity * sample_interval_ns / 2.0


def depth_of_sample(row: float, grid: BScanGrid) -> float:
    """Depth in meters of a (possibly fractional) sample row"""
    if not 0.0 <= row <= grid.rows - 1:
        raise ValueError(f"row {row} outside grid of {grid.rows} samples")
    return row * metres_per_sample(grid.sample_interval, grid.relative_permittivity)


def row_of_depth(depth: float, sample_interval_ns: float, relative_permittivity: float) -> float:
    """Fractional sample row recording a reflector at the given depth"""
    return depth / metres_per_sample(sample_interval_ns, relative_permittivity)


def preprocess(grid: BScanGrid, threshold_k: float = 2.0, min_component_area: int = 8) -> BinaryImage:
    """
    Remove the background, binarize and despeckle a B-scan

    Args:
        grid: source B-scan
        threshold_k: foreground where |amplitude| > mean + k * std of |amplitude|
        min_component_area: 8-connected components smaller than this are removed

    Returns:
        BinaryImage: foreground mask
    """
    background_free = grid.amplitudes - grid.amplitudes.mean(axis=1, keepdims=True)
    magnitude = np.abs(background_free)
    threshold = magnitude.mean() + threshold_k * magnitude.std()
    mask = magnitude > threshold

    labels, count = ndimage.label(mask, structure=_NEIGHBOURHOOD)
    if count:
        areas = np.bincount(labels.ravel())
        keep = areas >= min_component_area
        keep[0] = False
        mask = keep[labels]

    logger.debug(f"Preprocessing kept {int(mask.sum())} foreground pixels of {mask.size}")
    return BinaryImage(mask=mask)


def _column_runs(column: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.concatenate(([0], column.astype(np.int8), [0]))
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _link_chains(runs: List[List[Tuple[int, int]]]) -> List[List[Segment]]:
    """Link runs of adjacent columns that overlap by at least one row into chains"""
    claimed = [[False] * len(column_runs) for column_runs in runs]
    chains: List[List[Segment]] = []
    for start in range(len(runs)):
        for index, (top, bottom) in enumerate(runs[start]):
            if claimed[start][index]:
                continue
            claimed[start][index] = True
            chain = [Segment(column=start, top=top, bottom=bottom)]
            column = start
            while column + 1 < len(runs):
                best, best_key = None, (0, 0)
                for j, (next_top, next_bottom) in enumerate(runs[column + 1]):
                    if claimed[column + 1][j]:
                        continue
                    overlap = min(bottom, next_bottom) - max(top, next_top) + 1
                    # largest overlap first, then the longer run
                    key = (overlap, next_bottom - next_top)
                    if overlap >= 1 and key > best_key:
                        best, best_key = j, key
                if best is None:
                    break
                column += 1
                claimed[column][best] = True
                top, bottom = runs[column][best]
                chain.append(Segment(column=column, top=top, bottom=bottom))
            chains.append(chain)
    return chains


def downward_opening_apex(tops: Sequence[int], tolerance: int) -> Optional[int]:
    """
    Index of the apex if the top-row profile opens downward, else None

    The profile must fall to a single minimal region and rise after it,
    with local reversals of at most `tolerance` rows, and both ends must lie
    more than `tolerance` rows below the apex.
    """
    profile = np.asarray(tops, dtype=int)
    lowest = profile.min()
    minima = np.flatnonzero(profile == lowest)
    apex = int(minima[len(minima) // 2])

    left = profile[: apex + 1]
    right = profile[apex:][::-1]
    violation = max(
        int(np.max(left - np.minimum.accumulate(left))),
        int(np.max(right - np.minimum.accumulate(right))),
    )
    if violation > tolerance:
        return None
    if profile[0] - lowest <= tolerance or profile[-1] - lowest <= tolerance:
        return None
    return apex


def find_downward_opening_clusters(img: BinaryImage, min_width: int = 15, tolerance: int = 2) -> List[Cluster]:
    """
    Scan the binary image for downward-opening clusters

    Args:
        img: preprocessed binary image
        min_width: clusters must span more columns than this
        tolerance: allowed local violation of the opening shape, in rows

    Returns:
        list of Cluster ordered by apex row (shallowest first)
    """
    runs = [_column_runs(img.mask[:, c]) for c in range(img.shape[1])]
    clusters = []
    for chain in _link_chains(runs):
        if len(chain) <= min_width:
            continue
        apex = downward_opening_apex([s.top for s in chain], tolerance)
        if apex is None:
            continue
        clusters.append(Cluster(segments=chain, apex_column=chain[apex].column))

    clusters.sort(key=lambda c: (c.apex_row, c.apex_column))
    logger.info(f"Found {len(clusters)} downward-opening clusters")
    return clusters


def extract_point_set(
    cluster: Cluster,
    grid: BScanGrid,
    spacing: float = 0.02,
    count: Optional[int] = 30,
) -> SignaturePointSet:
    """
    Select the apex column and columns alternately left and right of it at a
    fixed spacing, and take the midpoint of each column's run

    With `count` None every column of the cluster at the spacing is taken.
    Columns whose run reaches the last sample are skipped.

    Raises:
        ClusterTooNarrow: fewer than 6 points available
    """
    step = max(1, int(round(spacing / grid.trace_spacing)))
    first = cluster.first_column
    last = first + cluster.width - 1

    limit = count if count is not None else cluster.width
    selected = [cluster.apex_column]
    k = 1
    while len(selected) < limit:
        progressed = False
        for column in (cluster.apex_column - k * step, cluster.apex_column + k * step):
            if len(selected) < limit and first <= column <= last:
                selected.append(column)
                progressed = True
        if not progressed:
            break
        k += 1

    points = []
    for column in sorted(selected):
        segment = cluster.segment_at(column)
        # runs cut off by the last sample have no reliable midpoint
        if segment.bottom >= grid.rows - 1:
            continue
        depth = depth_of_sample(segment.mid_row, grid)
        if depth > 0.0:
            points.append((column * grid.trace_spacing, depth))

    if len(points) < MIN_POINTS:
        raise ClusterTooNarrow(f"only {len(points)} points available, at least {MIN_POINTS} needed")

    flags = []
    if count is not None and len(points) < count:
        flags.append("short_extraction")
        logger.warning(f"Short extraction: {len(points)} of {count} points")
    actual_spacing = step * grid.trace_spacing
    if abs(actual_spacing - spacing) > 1e-9:
        flags.append("spacing_rounded")

    return SignaturePointSet(
        points=points,
        apex_x=cluster.apex_column * grid.trace_spacing,
        spacing_m=actual_spacing,
        flags=flags,
    )


def sidecar_path(data_path: Union[str, Path]) -> Path:
    """The JSON sidecar sits next to the data file with a .json suffix"""
    return Path(data_path).with_suffix(".json")


def load_bscan(path: Union[str, Path]) -> BScanGrid:
    """
    Load a float32 little-endian row-major data file or a CSV grid, with its sidecar

    Raises:
        BScanFormatError: missing or malformed sidecar, or a size mismatch
    """
    path = Path(path)
    side = sidecar_path(path)
    if not side.is_file():
        raise BScanFormatError(f"missing sidecar {side} for {path}")
    try:
        header = BScanHeader(**json.loads(side.read_text()))
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise BScanFormatError(f"invalid sidecar {side}: {e}") from e

    try:
        if path.suffix.lower() == ".csv":
            data = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
        else:
            data = np.fromfile(path, dtype="<f4").astype(float)
    except ValueError as e:
        raise BScanFormatError(f"cannot parse {path}: {e}") from e

    if data.size != header.samples * header.traces:
        raise BScanFormatError(
            f"{path} holds {data.size} values, sidecar declares "
            f"{header.samples} x {header.traces}"
        )

    logger.info(f"Loaded B-scan {path} ({header.samples} samples x {header.traces} traces)")
    return BScanGrid(
        amplitudes=data.reshape(header.samples, header.traces),
        trace_spacing=header.trace_spacing_m,
        sample_interval=header.sample_interval_ns,
        relative_permittivity=header.relative_permittivity,
        ground_truth=header.ground_truth,
    )


def save_bscan(grid: BScanGrid, path: Union[str, Path]) -> Path:
    """Write the grid (CSV when the suffix is .csv, float32 otherwise) and its sidecar"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".csv":
        np.savetxt(path, grid.amplitudes, delimiter=",", fmt="%.9g")
    else:
        grid.amplitudes.astype("<f4").tofile(path)
    sidecar_path(path).write_text(
        json.dumps(grid.header().model_dump(exclude_none=True), indent=2, sort_keys=True) + "\n"
    )
    return path


def extraction_payload(pts: SignaturePointSet) -> Dict[str, Any]:
    """Extraction output: {"points", "apex_x_m", "spacing_m", "flags"}"""
    return {
        "points": [[x, y] for x, y in pts.points],
        "apex_x_m": pts.apex_x,
        "spacing_m": pts.spacing_m,
        "flags": list(pts.flags),
    }


def point_set_from_payload(payload: Dict[str, Any]) -> SignaturePointSet:
    """Rebuild a point set from an extraction payload"""
    return SignaturePointSet(
        points=[tuple(p) for p in payload["points"]],
        apex_x=payload.get("apex_x_m"),
        spacing_m=payload.get("spacing_m"),
        flags=payload.get("flags", []),
    )
