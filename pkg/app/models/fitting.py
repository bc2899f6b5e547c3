"""
Pydantic models for curve fitting results
"""

from pydantic import BaseModel, ConfigDict, Field

from app.models.geometry import ConicCoeffs, Ellipse


class FitResult(BaseModel):
    """Constrained algebraic ellipse fit (B = 0, 4AC = 1)"""

    model_config = ConfigDict(frozen=True)

    conic: ConicCoeffs
    ellipse: Ellipse
    algebraic_residual: float = Field(..., ge=0, description="Sum of squared algebraic distances")
    geometric_rms: float = Field(..., ge=0, description="RMS Euclidean point-to-ellipse distance in meters")


class HyperbolaFit(BaseModel):
    """Circular-pipe hyperbola model (d + r)^2 - (x - x0)^2 = y0^2"""

    model_config = ConfigDict(frozen=True)

    apex_x: float = Field(..., description="Apex position x0 in meters")
    depth_to_center: float = Field(..., description="Pipe center depth y0 in meters")
    radius: float = Field(..., gt=0, description="Pipe radius r in meters")
    residual: float = Field(..., ge=0, description="Sum of squared depth residuals in m^2")


class SignatureFit(BaseModel):
    """Cross section fitted directly to the recorded pivot distances"""

    model_config = ConfigDict(frozen=True)

    ellipse: Ellipse
    rms: float = Field(..., ge=0, description="RMS depth misfit of the pivots in meters")
    evaluations: int = Field(..., ge=0, description="Residual evaluations used")
