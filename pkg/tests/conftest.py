"""
Shared fixtures: exact ellipse samples, forward-model signatures and map files
"""

import json
import logging
import math

import numpy as np
import pytest

from app.models.geometry import Ellipse
from app.models.signature import IterationResidual, PipeEstimate
from app.services.geometry import project_point


def boundary_points(ellipse: Ellipse, count: int = 30):
    """Points on the boundary at uniform parameter angles"""
    return [tuple(p) for p in ellipse.sample_boundary(count)]


def forward_signature(ellipse: Ellipse, xs):
    """Recorded depths d(x) and true angles for pivots (x, 0) above the ellipse"""
    projections = [project_point(ellipse, (float(x), 0.0)) for x in xs]
    points = [(float(x), p.distance) for x, p in zip(xs, projections)]
    angles = [p.angle_from_vertical for p in projections]
    return points, angles


def make_estimate(radius: float = 0.3, alpha_deg: float = 60.0, chosen_bearing=None) -> PipeEstimate:
    alpha = math.radians(alpha_deg)
    return PipeEstimate(
        ellipse=Ellipse(center_x=0.0, center_y=1.5, a=radius / math.sin(alpha), b=radius),
        alpha=alpha,
        radius=radius,
        chosen_bearing=chosen_bearing,
        iterations_used=3,
        best_iteration=3,
        stop_reason="converged",
        residual_history=[IterationResidual(algebraic_residual=0.0, geometric_rms=0.0)] * 3,
    )


@pytest.fixture
def shallow_ellipse():
    """Oblique cross section (alpha = 30 deg) close to the surface"""
    return Ellipse(center_x=0.0, center_y=0.6, a=0.4, b=0.2)


@pytest.fixture
def wide_pivots():
    return np.linspace(-0.6, 0.6, 61)


@pytest.fixture
def map_file(tmp_path):
    path = tmp_path / "map.json"
    path.write_text(
        json.dumps(
            {
                "segments": [
                    {"id": "main", "start": [0.0, 0.0], "end": [10.0, 0.0], "radius_m": None},
                    {"id": "side", "start": [0.0, 20.0], "end": [0.0, 30.0], "radius_m": 0.1},
                ]
            }
        )
    )
    return path


@pytest.fixture(autouse=True)
def _drop_cli_log_handler():
    """The CLI binds its handler to the stderr of the moment; detach it after each test"""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == "pipescan":
            root.removeHandler(handler)
