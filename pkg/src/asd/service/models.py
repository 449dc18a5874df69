"""Pydantic request/response models for the HTTP API.

Images travel as base64-encoded PNG strings. Every response carries
``schema_version`` so stored reports remain self-describing.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from .. import SCHEMA_VERSION


class BoxModel(BaseModel):
    x1: float
    y1: float
    x2: float
    y2: float
    score: float = Field(default=1.0, ge=0.0, le=1.0)
    label: int = 0

    @model_validator(mode="after")
    def _corners_ordered(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(
                f"box corners must be ordered: ({self.x1}, {self.y1}, "
                f"{self.x2}, {self.y2})"
            )
        return self


class MaskSettings(BaseModel):
    theta: float = Field(default=0.17, gt=0.0)
    max_level: int = Field(default=3, ge=0)
    blur_sigma: float = Field(default=10.0, gt=0.0)
    blur_radius: int = Field(default=20, ge=1)


class PipelineSettings(BaseModel):
    theta: float = Field(default=0.17, gt=0.0)
    levels: list[int] = Field(default=[0, 1, 2, 3], min_length=1)
    nms_iou: float = Field(default=0.4, gt=0.0, lt=1.0)
    blur_sigma: float = Field(default=10.0, gt=0.0)
    blur_radius: int = Field(default=20, ge=1)


class MaskRequest(BaseModel):
    image_png_b64: str
    settings: MaskSettings = MaskSettings()


class MaskResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    defended_png_b64: str
    mask_png_b64: str
    height: int
    width: int
    mask_pixel_count: int
    mask_fraction: float


class DetectRequest(BaseModel):
    image_png_b64: str
    detector_command: str
    settings: PipelineSettings = PipelineSettings()


class DetectResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    boxes: list[BoxModel]


class PatchModel(BaseModel):
    kind: Literal[
        "checkerboard", "uniform-noise", "tiled-texture", "range-limited-noise"
    ]
    x1: float
    y1: float
    x2: float
    y2: float
    amplitude: float = Field(ge=0.0)
    period: int = Field(default=2, ge=1)
    value_center: float = 0.5

    @model_validator(mode="after")
    def _corners_ordered(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("patch region corners must be ordered")
        return self


class InjectRequest(BaseModel):
    image_png_b64: str
    patch: PatchModel
    seed: int = 0


class InjectResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    image_png_b64: str


class AnalyzeRequest(BaseModel):
    patches_png_b64: list[str] = Field(min_length=1)
    levels: int = Field(default=3, ge=1)


class AnalyzeResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    levels: int
    patch_count: int
    per_level_mean: list[float]
    per_level_ci95: list[float]


class VerifyBoundRequest(BaseModel):
    epsilon: float = Field(gt=0.0)
    levels: int = Field(default=3, ge=1)
    trials: int = Field(default=10000, ge=0)
    height: int = Field(default=32, ge=1)
    width: int = Field(default=32, ge=1)
    seed: int | None = None


class BoundReportModel(BaseModel):
    schema_version: int = SCHEMA_VERSION
    epsilon: float
    levels_checked: int
    trials: int
    seed: int
    max_observed_ratio: float
    violated: bool
    exhaustive_max_detail: float
    exhaustive_max_approx: float


class EvalDetectorSpec(BaseModel):
    kind: Literal["oracle", "command"] = "oracle"
    command: str | None = None
    overlap_drop_fraction: float = Field(default=0.5, gt=0.0, le=1.0)
    blur_restore_fraction: float = Field(default=0.9, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _command_present(self):
        if self.kind == "command" and not self.command:
            raise ValueError("detector kind 'command' requires a command")
        return self


class RegionModel(BaseModel):
    x1: float
    y1: float
    x2: float
    y2: float

    @model_validator(mode="after")
    def _corners_ordered(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError("region corners must be ordered")
        return self


class EvalImage(BaseModel):
    name: str
    image_png_b64: str
    gt_boxes: list[BoxModel] = []
    patch_region: RegionModel | None = None


class EvalRequest(BaseModel):
    images: list[EvalImage] = Field(min_length=1)
    settings: PipelineSettings = PipelineSettings()
    detector: EvalDetectorSpec = EvalDetectorSpec()


class EvalResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    ap50: float
    image_count: int
    detections: dict[str, list[BoxModel]]


class BenchmarkRequest(BaseModel):
    height: int = Field(default=416, ge=8)
    width: int = Field(default=416, ge=8)
    settings: MaskSettings = MaskSettings()
    repeats: int = Field(default=10, ge=1)
    seed: int = 0


class BenchmarkResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    height: int
    width: int
    max_level: int
    repeats: int
    mean_ms: float
    median_ms: float
    min_ms: float
    max_ms: float


class HealthResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    name: str
    version: str
    status: str = "ok"


class DefaultsResponse(BaseModel):
    schema_version: int = SCHEMA_VERSION
    theta: float
    levels: list[int]
    nms_iou: float
    blur_sigma: float
    blur_radius: int
