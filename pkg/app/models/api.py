"""
Pydantic models for HTTP requests and responses
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class InvertRequest(BaseModel):
    """Request model for the inversion endpoint"""

    points: List[Tuple[float, float]] = Field(
        ..., min_length=6, description="Signature points (x, depth) in meters, x increasing"
    )
    max_iterations: Optional[int] = Field(None, ge=1, description="Override of the iteration cap K")
    rms_threshold_m: Optional[float] = Field(None, gt=0)
    stability_epsilon_m: Optional[float] = Field(None, gt=0)
    refine: Optional[bool] = Field(None, description="Override of the final depth-misfit minimization")
    detecting_bearing: Optional[float] = Field(None, ge=0, lt=360, description="GPR travel direction in degrees")
    map_bearing: Optional[float] = Field(None, description="Bearing of the mapped pipe in degrees")

    class Config:
        json_schema_extra = {
            "example": {
                "points": [[-0.1, 1.21], [-0.06, 1.205], [-0.02, 1.2], [0.02, 1.2], [0.06, 1.205], [0.1, 1.21]],
                "detecting_bearing": 80.0,
                "map_bearing": 130.0,
            }
        }


class BearingRequest(BaseModel):
    """Request model for bearing disambiguation"""

    detecting_bearing: float = Field(..., ge=0, lt=360)
    alpha_deg: float = Field(..., gt=0, le=90, description="Obliquity in degrees")
    map_bearing: float

    class Config:
        json_schema_extra = {"example": {"detecting_bearing": 80.0, "alpha_deg": 60.0, "map_bearing": 130.0}}


class BearingResponse(BaseModel):
    """Candidate pipe bearings and the one matching the map"""

    candidates: Tuple[float, float]
    chosen: float
    tie: bool
