"""
Pydantic models for signature point sets and pipe estimates
"""

import math
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.geometry import Ellipse, Point


class SignaturePointSet(BaseModel):
    """Downward-opening points extracted from a B-scan, in meters"""

    model_config = ConfigDict(frozen=True)

    points: List[Point] = Field(..., description="Original (x_i, y_i) signature points")
    cumulative_angles: List[float] = Field(
        ..., description="Per-point rotation angles in radians; zeros when omitted"
    )
    apex_x: Optional[float] = Field(None, description="Scan position of the cluster apex in meters")
    spacing_m: Optional[float] = Field(None, description="Actual spacing between selected columns")
    flags: List[str] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _default_angles(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("cumulative_angles") is None:
            data = {**data, "cumulative_angles": [0.0] * len(data.get("points") or [])}
        return data

    @model_validator(mode="after")
    def _check_points(self) -> "SignaturePointSet":
        if len(self.cumulative_angles) != len(self.points):
            raise ValueError("one cumulative angle is required per point")
        if any(y <= 0.0 for _, y in self.points):
            raise ValueError("all signature depths must be positive")
        xs = [x for x, _ in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("signature x positions must be strictly increasing")
        if any(abs(t) >= 0.5 * math.pi for t in self.cumulative_angles):
            raise ValueError("cumulative angles must stay within (-pi/2, pi/2)")
        return self

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.points], dtype=float)

    @property
    def ys(self) -> np.ndarray:
        return np.array([y for _, y in self.points], dtype=float)


class EiiaConfig(BaseModel):
    """Stopping parameters of the iterative inversion"""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(10, ge=1, description="Maximum number of fits K")
    rms_threshold_m: float = Field(0.03, gt=0, description="Geometric RMS tolerance in meters")
    stability_epsilon_m: float = Field(
        1e-4, gt=0, description="Residual change below which the inversion is stable"
    )
    refine: bool = Field(
        True, description="Minimize the depth misfit from the best iterate once iteration stops"
    )


class IterationResidual(BaseModel):
    """Residuals recorded for one fit-and-rotate iteration, or for the refinement"""

    model_config = ConfigDict(frozen=True)

    algebraic_residual: float
    geometric_rms: float = Field(..., description="RMS depth misfit of the pivots in meters")
    refined: bool = Field(False, description="True for the entry produced by the refinement")


class Obliquity(BaseModel):
    """Angle between pipe and detecting direction, and the pipe radius"""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., description="Obliquity in radians, (0, pi/2]")
    radius: float = Field(..., description="Pipe radius in meters")
    clamped: bool = Field(False, description="True when a < b forced alpha = pi/2")


class BearingChoice(BaseModel):
    """The two candidate pipe bearings and the one matching the map"""

    model_config = ConfigDict(frozen=True)

    chosen: float
    candidates: Tuple[float, float]
    tie: bool = False


class PipeEstimate(BaseModel):
    """Inverted cross section with the derived obliquity and radius"""

    model_config = ConfigDict(frozen=True)

    ellipse: Ellipse
    alpha: float = Field(..., description="Obliquity in radians")
    radius: float = Field(..., description="Pipe radius in meters (ellipse.b)")
    candidate_bearings: Optional[Tuple[float, float]] = None
    chosen_bearing: Optional[float] = None
    iterations_used: int
    best_iteration: int = Field(..., description="1-based index of the returned entry in residual_history")
    stop_reason: str
    residual_history: List[IterationResidual]
    inverted_points: List[Point] = Field(
        default_factory=list, description="Signature points rotated onto the returned ellipse"
    )
    flags: List[str] = Field(default_factory=list)

    @property
    def alpha_deg(self) -> float:
        return math.degrees(self.alpha)
