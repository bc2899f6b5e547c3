"""
Pydantic models for B-scan grids, binary images and signature clusters
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class BScanHeader(BaseModel):
    """JSON sidecar accompanying every B-scan data file"""

    traces: int = Field(..., ge=2)
    samples: int = Field(..., ge=2)
    trace_spacing_m: float = Field(..., gt=0)
    sample_interval_ns: float = Field(..., gt=0)
    relative_permittivity: float = Field(..., ge=1)
    ground_truth: Optional[str] = Field(None, description="Optional ground-truth sidecar path")


class BScanGrid(BaseModel):
    """Amplitude grid: rows are time samples (top earliest), columns are traces"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amplitudes: np.ndarray
    trace_spacing: float = Field(..., gt=0, description="Meters per trace")
    sample_interval: float = Field(..., gt=0, description="Nanoseconds per sample")
    relative_permittivity: float = Field(..., ge=1)
    ground_truth: Optional[str] = None

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _check_amplitudes(cls, value: np.ndarray) -> np.ndarray:
        grid = np.array(value, dtype=float)
        if grid.ndim != 2 or grid.shape[0] < 2 or grid.shape[1] < 2:
            raise ValueError(f"amplitudes must be a 2-D grid of at least 2x2, got {grid.shape}")
        grid.setflags(write=False)
        return grid

    @property
    def rows(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def cols(self) -> int:
        return self.amplitudes.shape[1]

    def header(self) -> BScanHeader:
        return BScanHeader(
            traces=self.cols,
            samples=self.rows,
            trace_spacing_m=self.trace_spacing,
            sample_interval_ns=self.sample_interval,
            relative_permittivity=self.relative_permittivity,
            ground_truth=self.ground_truth,
        )


class BinaryImage(BaseModel):
    """Boolean foreground mask with the shape of its source grid"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mask: np.ndarray

    @field_validator("mask", mode="before")
    @classmethod
    def _check_mask(cls, value: np.ndarray) -> np.ndarray:
        mask = np.array(value, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("mask must be 2-D")
        mask.setflags(write=False)
        return mask

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mask.shape


class Segment(BaseModel):
    """Vertical run of foreground pixels in one column"""

    model_config = ConfigDict(frozen=True)

    column: int
    top: int
    bottom: int

    @property
    def mid_row(self) -> float:
        return 0.5 * (self.top + self.bottom)


class Cluster(BaseModel):
    """Chain of column runs forming a downward-opening signature"""

    model_config = ConfigDict(frozen=True)

    segments: List[Segment]
    apex_column: int

    @model_validator(mode="after")
    def _check_chain(self) -> "Cluster":
        columns = [s.column for s in self.segments]
        if columns != list(range(columns[0], columns[0] + len(columns))):
            raise ValueError("cluster columns must be contiguous")
        if self.apex_column not in columns:
            raise ValueError("apex column must belong to the cluster")
        return self

    @property
    def first_column(self) -> int:
        return self.segments[0].column

    @property
    def width(self) -> int:
        return len(self.segments)

    @property
    def apex_row(self) -> int:
        return min(s.top for s in self.segments)

    def segment_at(self, column: int) -> Segment:
        return self.segments[column - self.first_column]
