"""
Pydantic models for ellipse geometry
"""

from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Point = Tuple[float, float]


class Ellipse(BaseModel):
    """Axis-aligned ellipse; depth axis y points downward"""

    model_config = ConfigDict(frozen=True)

    center_x: float = Field(..., description="Horizontal center position in meters")
    center_y: float = Field(..., description="Center depth in meters, positive downward")
    a: float = Field(..., gt=0, description="Horizontal semi-axis in meters")
    b: float = Field(..., gt=0, description="Vertical semi-axis in meters")

    @property
    def center(self) -> Point:
        return (self.center_x, self.center_y)

    @property
    def lies_below_surface(self) -> bool:
        """True when the whole cross section is below the surface line y = 0"""
        return self.center_y > self.b

    def level(self, x: float, y: float) -> float:
        """Normalized ellipse equation value: 1 on the boundary, < 1 inside"""
        u = (x - self.center_x) / self.a
        v = (y - self.center_y) / self.b
        return u * u + v * v

    def sample_boundary(self, count: int = 180) -> np.ndarray:
        """Return `count` boundary points at uniform parameter angles, shape (count, 2)"""
        t = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
        return np.column_stack(
            (self.center_x + self.a * np.cos(t), self.center_y + self.b * np.sin(t))
        )


class ConicCoeffs(BaseModel):
    """General conic A x^2 + B xy + C y^2 + D x + E y + F = 0"""

    model_config = ConfigDict(frozen=True)

    A: float
    B: float = 0.0
    C: float
    D: float = 0.0
    E: float = 0.0
    F: float = 0.0

    @model_validator(mode="after")
    def _quadratic_part_present(self) -> "ConicCoeffs":
        if self.A == 0.0 and self.B == 0.0 and self.C == 0.0:
            raise ValueError("A, B and C cannot all be zero")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.D, self.E, self.F], dtype=float)

    def evaluate(self, x, y):
        """Algebraic distance F(A, x) of one point or of arrays of points"""
        return (
            self.A * x * x
            + self.B * x * y
            + self.C * y * y
            + self.D * x
            + self.E * y
            + self.F
        )


class ProjectionResult(BaseModel):
    """Shortest-distance projection of an external point onto an ellipse"""

    model_config = ConfigDict(frozen=True)

    nearest_point: Point
    distance: float = Field(..., ge=0)
    angle_from_vertical: float = Field(
        ...,
        description="Signed angle in radians between the downward vertical and the ray "
        "to the nearest point; positive toward decreasing x",
    )
