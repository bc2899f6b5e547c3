"""
Forward simulator: rasterizes the signature a buried pipe leaves on a B-scan
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.errors import SceneOutOfGrid
from app.models.bscan import BScanGrid
from app.models.geometry import Ellipse, Point
from app.models.scene import GridParams, GroundTruth, PipeScene
from app.services.bscan import row_of_depth, save_bscan
from app.services.geometry import project_point, signature_distances

logger = logging.getLogger(__name__)

BSCAN_FILE = "bscan.f32"
TRUTH_FILE = "truth.json"
MASK_FILE = "mask.npy"


def cross_section_of(scene: PipeScene) -> Ellipse:
    """Cut of the pipe by the vertical scan plane: b = r, a = r / sin(alpha)"""
    return Ellipse(
        center_x=scene.apex_position,
        center_y=scene.depth_to_center,
        a=scene.radius / math.sin(scene.alpha),
        b=scene.radius,
    )


def signature_depth(scene: PipeScene, x: float) -> float:
    """Recorded depth at scan position x: shortest distance from (x, 0) to the cross section"""
    return project_point(cross_section_of(scene), (x, 0.0)).distance


def _nearest_row(row: float) -> int:
    return int(math.floor(row + 0.5))


def render(
    scenes: Union[PipeScene, Sequence[PipeScene]],
    grid_params: Optional[GridParams] = None,
    seed: int = 0,
) -> Tuple[BScanGrid, GroundTruth]:
    """
    Render one or more pipe signatures on a synthetic B-scan

    Each trace j at x_j = j * trace_spacing gets a vertical band of
    `signature_thickness` samples of amplitude 1.0 centered on the row of
    signature_depth(x_j). Salt noise is drawn from numpy's default generator
    seeded with `seed`, at the largest fraction requested by the scenes.

    Args:
        scenes: a scene or a sequence of scenes sharing the grid
        grid_params: acquisition parameters; the column count follows the longest scan
        seed: noise seed

    Returns:
        (BScanGrid, GroundTruth)

    Raises:
        SceneOutOfGrid: an apex lies outside the grid
    """
    if isinstance(scenes, PipeScene):
        scenes = [scenes]
    scenes = list(scenes)
    if not scenes:
        raise ValueError("at least one scene is required")
    params = grid_params or GridParams()

    rows = params.rows
    cols = params.columns_for(max(s.scan_length for s in scenes))
    dx = params.trace_spacing_m
    amplitudes = np.zeros((rows, cols), dtype=float)

    signatures: List[List[Point]] = []
    apex_columns: List[int] = []
    for scene in scenes:
        apex_row = _nearest_row(
            row_of_depth(scene.depth_to_center - scene.radius, params.sample_interval_ns, params.relative_permittivity)
        )
        apex_column = _nearest_row(scene.apex_position / dx)
        if apex_row > rows - 1:
            raise SceneOutOfGrid(f"apex row {apex_row} is below the last of {rows} samples")
        if not 0 <= apex_column <= cols - 1:
            raise SceneOutOfGrid(f"apex at x={scene.apex_position} m lies outside the {cols} traces")

        half = (scene.signature_thickness - 1) // 2
        positions = np.arange(cols) * dx
        depths, _ = signature_distances(cross_section_of(scene), positions)
        signature: List[Point] = []
        for j in range(cols):
            x, depth = float(positions[j]), float(depths[j])
            if scene.aperture_m is not None and abs(x - scene.apex_position) > scene.aperture_m:
                continue
            centre = _nearest_row(row_of_depth(depth, params.sample_interval_ns, params.relative_permittivity))
            top = centre - half
            if top > rows - 1:
                continue
            bottom = min(rows - 1, top + scene.signature_thickness - 1)
            amplitudes[max(0, top) : bottom + 1, j] = 1.0
            signature.append((x, depth))

        signatures.append(signature)
        apex_columns.append(apex_column)
        logger.debug(
            f"Rendered pipe r={scene.radius} z={scene.depth_to_center} "
            f"alpha={scene.alpha_deg:.1f} deg over {len(signature)} traces"
        )

    mask = amplitudes > 0.0
    fraction = max(s.noise_salt_fraction for s in scenes)
    salt = int(round(fraction * rows * cols))
    if salt:
        rng = np.random.default_rng(seed)
        picks = rng.choice(rows * cols, size=salt, replace=False)
        amplitudes.flat[picks] = 1.0

    grid = BScanGrid(
        amplitudes=amplitudes,
        trace_spacing=dx,
        sample_interval=params.sample_interval_ns,
        relative_permittivity=params.relative_permittivity,
    )
    truth = GroundTruth(scenes=scenes, signatures=signatures, apex_columns=apex_columns, mask=mask, seed=seed)
    logger.info(f"Rendered {len(scenes)} scene(s) on a {rows}x{cols} grid with {salt} salt pixels")
    return grid, truth


def truth_payload(truth: GroundTruth, mask_file: str = MASK_FILE) -> Dict:
    """Ground-truth sidecar: the first scene and its signature, plus every scene"""
    entries = [
        {"scene": scene.model_dump(), "signature": [list(p) for p in signature], "apex_column": column}
        for scene, signature, column in zip(truth.scenes, truth.signatures, truth.apex_columns)
    ]
    return {
        "scene": entries[0]["scene"],
        "signature": entries[0]["signature"],
        "scenes": entries,
        "seed": truth.seed,
        "mask_file": mask_file,
    }


def write_scene(
    grid: BScanGrid,
    truth: GroundTruth,
    out_dir: Union[str, Path],
    data_file: str = BSCAN_FILE,
) -> Dict[str, Path]:
    """
    Write the B-scan, its sidecar, the ground-truth JSON and the noise-free mask

    Returns:
        paths keyed by "bscan", "sidecar", "truth" and "mask"
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    truth_path = out / TRUTH_FILE
    mask_path = out / MASK_FILE
    linked = grid.model_copy(update={"ground_truth": TRUTH_FILE})
    data_path = save_bscan(linked, out / data_file)

    np.save(mask_path, truth.mask)
    truth_path.write_text(json.dumps(truth_payload(truth), indent=2, sort_keys=True) + "\n")

    logger.info(f"Wrote synthetic scene to {out}")
    return {
        "bscan": data_path,
        "sidecar": data_path.with_suffix(".json"),
        "truth": truth_path,
        "mask": mask_path,
    }
