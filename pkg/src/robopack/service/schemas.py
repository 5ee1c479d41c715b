"""Request and response models for the packing service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, field_validator

AlgorithmName = Literal["firstfit", "floor", "column", "walle"]


class CreateSessionRequest(BaseModel):
    bin_dims: tuple[int, int, int] = (45, 80, 45)
    max_bins: int = Field(default=16, ge=1, le=1024)
    algorithm: AlgorithmName = "walle"
    walle_params: tuple[float, float, float, float, float] | None = None

    @field_validator("bin_dims")
    @classmethod
    def _positive_dims(cls, v):
        if any(d < 1 for d in v):
            raise ValueError("bin dimensions must be positive")
        return v

    @field_validator("walle_params")
    @classmethod
    def _non_negative(cls, v):
        if v is not None and any(w < 0 for w in v):
            raise ValueError("stability weights must be non-negative")
        return v


class SessionSummary(BaseModel):
    session_id: str
    algorithm: AlgorithmName
    bin_dims: tuple[int, int, int]
    max_bins: int
    bins_used: int
    boxes_placed: int
    placed_volume: int
    fill_fraction: float  # of the bins opened so far


class BoxRequest(BaseModel):
    l: int = Field(ge=1)
    b: int = Field(ge=1)
    h: int = Field(ge=1)


class PlacementResponse(BaseModel):
    bin: int
    anchor: tuple[int, int]
    orientation: Literal["asis", "rot90"]
    resting_height: int
    opened_new_bin: bool
    bins_used: int
    boxes_placed: int
    fill_fraction: float


class HeightsResponse(BaseModel):
    session_id: str
    bins: list[list[list[int]]]  # one L x B integer map per open bin
