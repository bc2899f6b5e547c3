"""
Pydantic models for pipeline maps and survey lines
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.geometry import Point


class MapSegment(BaseModel):
    """Straight pipe segment in local plan coordinates (meters)"""

    model_config = ConfigDict(frozen=True)

    id: str
    start: Point
    end: Point
    radius_m: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_endpoints(self) -> "MapSegment":
        if tuple(self.start) == tuple(self.end):
            raise ValueError(f"segment {self.id} has identical endpoints")
        return self


class PipeMap(BaseModel):
    """An existing pipeline map"""

    model_config = ConfigDict(frozen=True)

    segments: List[MapSegment]

    @field_validator("segments")
    @classmethod
    def _unique_ids(cls, segments: List[MapSegment]) -> List[MapSegment]:
        ids = [s.id for s in segments]
        if len(ids) != len(set(ids)):
            raise ValueError("segment ids must be unique")
        return segments

    def segment(self, segment_id: str) -> Optional[MapSegment]:
        return next((s for s in self.segments if s.id == segment_id), None)


class SurveyLine(BaseModel):
    """Where the GPR crossed the pipe and which way it was moving"""

    model_config = ConfigDict(frozen=True)

    position: Point
    detecting_bearing: float = Field(..., ge=0, lt=360, description="Degrees clockwise from north")


class NearestSegment(BaseModel):
    """Result of a map lookup around a survey position"""

    model_config = ConfigDict(frozen=True)

    segment_id: str
    bearing: float = Field(..., ge=0, lt=180)
    distance: float = Field(..., ge=0)
    tie: bool = False
