"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class NormMethod(BaseModel):
    method: Literal["percentile_minmax", "zscore", "none"]
    p_lo: float | None = None
    p_hi: float | None = None

    def to_core(self) -> dict:
        spec = {"method": self.method}
        if self.method == "percentile_minmax":
            spec["p_lo"] = self.p_lo if self.p_lo is not None else 1.0
            spec["p_hi"] = self.p_hi if self.p_hi is not None else 99.0
        return spec


class ExtractParamsModel(BaseModel):
    theta: float = 0.3
    dilation_radius: int = Field(2, ge=0)
    min_len: int = Field(5, ge=1)
    half_window: int = Field(2, ge=0)
    min_separation: int | None = Field(None, ge=1)
    smooth_width: int = Field(1, ge=1)
    norm: dict[str, NormMethod] = Field(default_factory=dict)


class ExtractRequest(BaseModel):
    stack_path: str
    vessel_mask_path: str
    out_dir: str
    params: ExtractParamsModel = Field(default_factory=ExtractParamsModel)


class ExtractResponse(BaseModel):
    out_dir: str
    segment_count: int
    artery_seed_count: int
    artery_seed_labels: list[int]
    systolic_peaks: list[int]
    diastolic_valleys: list[int]
    params: dict
    artifacts: list[str]


class EvaluateRequest(BaseModel):
    pred_path: str
    gt_path: str
    out_path: str


class EvaluateResponse(BaseModel):
    out_path: str
    report: dict
    table: str


class PhantomRequest(BaseModel):
    spec_path: str
    out_dir: str


class PhantomResponse(BaseModel):
    out_dir: str
    dims: list[int]
    vessels: list[dict]
    artifacts: list[str]


class InfoRequest(BaseModel):
    path: str


class InfoResponse(BaseModel):
    kind: str
    height: int
    width: int
    frames: int | None = None
    dtype: str | None = None
    frame_rate: float | None = None
    labels: dict[str, int] | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
