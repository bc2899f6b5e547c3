"""
Pydantic models for synthetic pipe scenes and their ground truth
"""

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.geometry import Point


class PipeScene(BaseModel):
    """One buried pipe crossed by the scan line"""

    model_config = ConfigDict(frozen=True)

    radius: float = Field(..., gt=0, description="Pipe radius r in meters")
    depth_to_center: float = Field(..., gt=0, description="Depth of the pipe axis z_c in meters")
    alpha: float = Field(..., gt=0, le=0.5 * math.pi, description="Obliquity in radians")
    apex_x: Optional[float] = Field(None, description="Scan position above the pipe; middle of the scan when omitted")
    scan_length: float = Field(12.0, gt=0, description="Length of the scan line in meters")
    noise_salt_fraction: float = Field(0.0, ge=0, le=1, description="Fraction of pixels set by salt noise")
    signature_thickness: int = Field(3, ge=1, description="Band thickness in samples")
    aperture_m: Optional[float] = Field(
        None, gt=0, description="Only render the signature within this half-width of the apex"
    )

    @model_validator(mode="after")
    def _check_burial(self) -> "PipeScene":
        if self.depth_to_center <= self.radius:
            raise ValueError(
                f"pipe axis depth {self.depth_to_center} must exceed its radius {self.radius}"
            )
        return self

    @classmethod
    def from_degrees(cls, radius: float, depth_to_center: float, alpha_deg: float, **kwargs) -> "PipeScene":
        if not 0.0 < alpha_deg <= 90.0:
            raise ValueError(f"obliquity must be in (0, 90] degrees, got {alpha_deg}")
        return cls(radius=radius, depth_to_center=depth_to_center, alpha=math.radians(alpha_deg), **kwargs)

    @property
    def alpha_deg(self) -> float:
        return math.degrees(self.alpha)

    @property
    def apex_position(self) -> float:
        return 0.5 * self.scan_length if self.apex_x is None else self.apex_x


class GridParams(BaseModel):
    """Acquisition parameters of a rendered B-scan"""

    model_config = ConfigDict(frozen=True)

    trace_spacing_m: float = Field(0.01, gt=0)
    sample_interval_ns: float = Field(0.1, gt=0)
    relative_permittivity: float = Field(9.0, ge=1)
    rows: int = Field(1300, ge=2)
    cols: Optional[int] = Field(None, ge=2, description="Derived from the scan length when omitted")

    def columns_for(self, scan_length: float) -> int:
        if self.cols is not None:
            return self.cols
        return max(2, int(round(scan_length / self.trace_spacing_m)) + 1)


class GroundTruth(BaseModel):
    """What the renderer knows: scenes, analytic signatures and the noise-free mask"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scenes: List[PipeScene]
    signatures: List[List[Point]] = Field(..., description="Analytic (x, d(x)) samples per scene")
    apex_columns: List[int]
    mask: np.ndarray
    seed: Optional[int] = None
