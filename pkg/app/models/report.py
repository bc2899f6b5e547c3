"""
Pydantic models for run reports and bench results
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.geometry import Point
from app.models.pipemap import NearestSegment, SurveyLine
from app.models.signature import IterationResidual, PipeEstimate


class ClusterReport(BaseModel):
    """Everything computed for one downward-opening cluster, ready for plotting"""

    index: int
    apex_column: int
    apex_x_m: float
    width_columns: int
    extraction_flags: List[str] = Field(default_factory=list)
    points: List[Point] = Field(default_factory=list, description="Extracted signature points")
    estimate: Optional[PipeEstimate] = None
    inverted_points: List[Point] = Field(default_factory=list)
    ellipse_samples: List[Point] = Field(
        default_factory=list, description="Boundary samples of the returned cross section"
    )
    residual_history: List[IterationResidual] = Field(default_factory=list)
    nearest_segment: Optional[NearestSegment] = None
    error: Optional[str] = Field(None, description="Why this cluster produced no estimate")


class RunReport(BaseModel):
    """Self-contained result of one end-to-end run"""

    bscan_path: str
    map_path: Optional[str] = None
    revised_map_path: Optional[str] = None
    config: Dict[str, Any] = Field(..., description="Effective configuration with defaults resolved")
    survey: Optional[SurveyLine] = None
    clusters: List[ClusterReport] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)
    timings_s: Optional[Dict[str, float]] = None


class BenchRow(BaseModel):
    """One sweep case compared across EIIA and the hyperbola baseline"""

    alpha_deg: float
    radius_m: float
    depth_m: float
    noise: float
    seed: int
    eiia_radius_err: Optional[float] = Field(None, description="|r_hat - r| / r")
    hyperbola_radius_err: Optional[float] = Field(None, description="|r_hat - r| / r")
    alpha_err: Optional[float] = Field(None, description="|alpha_hat - alpha| in degrees")
    iterations: Optional[int] = None
    status: str = "ok"

    @property
    def key(self) -> tuple:
        return (self.alpha_deg, self.radius_m, self.depth_m, self.noise, self.seed)


class BenchCase(BaseModel):
    """One synthetic scene of a bench sweep"""

    alpha_deg: float = Field(..., gt=0, le=90)
    radius_m: float = Field(..., gt=0)
    depth_m: float = Field(..., gt=0, description="Depth of the pipe axis")
    noise: float = Field(0.0, ge=0, le=1)
    seed: int = 0


class SweepSpec(BaseModel):
    """Cartesian sweep over obliquity, radius, depth, noise and seed"""

    alphas_deg: List[float] = Field(default_factory=lambda: [45.0, 60.0, 75.0, 90.0])
    radii_m: List[float] = Field(default_factory=lambda: [0.2, 0.3, 0.4])
    depths_m: List[float] = Field(default_factory=lambda: [1.0, 1.5, 2.0])
    noise: List[float] = Field(default_factory=lambda: [0.0])
    seeds: List[int] = Field(default_factory=lambda: [0])
