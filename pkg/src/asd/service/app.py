"""FastAPI application exposing the defense pipeline.

All endpoints are stateless and pure: identical requests produce identical
responses, so the service can be replicated freely. Input-contract
violations map to HTTP 400, external detector failures to HTTP 502.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import __version__
from ..analysis import spectral_stats, verify_amplitude_bound
from ..analysis import DEFAULT_SEED
from ..benchmark import run_mask_benchmark
from ..config import DEFAULTS
from ..detection import AsdConfig, BoundingBox, SubprocessDetector, detect_with_asd
from ..errors import DetectorError, InvalidInputError
from ..evaluate import (
    EvalItem,
    EvasionRule,
    evaluate_corpus,
    oracle_detector_factory,
)
from ..imgio import image_from_b64, image_to_b64, mask_to_b64
from ..masking import MaskConfig, asd_mask, to_grayscale
from ..patches import PatchSpec, inject_patch
from . import models


def _mask_config(settings: models.MaskSettings) -> MaskConfig:
    return MaskConfig(
        theta=settings.theta,
        n=settings.max_level,
        blur_sigma=settings.blur_sigma,
        blur_radius=settings.blur_radius,
    )


def _pipeline_config(settings: models.PipelineSettings) -> AsdConfig:
    return AsdConfig(
        theta=settings.theta,
        levels=tuple(settings.levels),
        nms_iou=settings.nms_iou,
        blur_sigma=settings.blur_sigma,
        blur_radius=settings.blur_radius,
    )


def _box_model(box: BoundingBox) -> models.BoxModel:
    return models.BoxModel(**box.to_dict())


def _box_from_model(model: models.BoxModel) -> BoundingBox:
    return BoundingBox(
        x1=model.x1,
        y1=model.y1,
        x2=model.x2,
        y2=model.y2,
        score=model.score,
        label=model.label,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="adversarial spectrum defense",
        version=__version__,
        description=(
            "Wavelet-based localization and blurring of high-amplitude image "
            "regions, with multi-level detection aggregation."
        ),
    )

    @app.exception_handler(InvalidInputError)
    async def _invalid_input(request, exc: InvalidInputError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/healthz", response_model=models.HealthResponse)
    def healthz() -> models.HealthResponse:
        return models.HealthResponse(name="asd", version=__version__)

    @app.get("/config/defaults", response_model=models.DefaultsResponse)
    def defaults() -> models.DefaultsResponse:
        return models.DefaultsResponse(
            theta=DEFAULTS["theta"],
            levels=list(DEFAULTS["levels"]),
            nms_iou=DEFAULTS["nms_iou"],
            blur_sigma=DEFAULTS["blur_sigma"],
            blur_radius=DEFAULTS["blur_radius"],
        )

    @app.post("/mask", response_model=models.MaskResponse)
    def mask(request: models.MaskRequest) -> models.MaskResponse:
        image = image_from_b64(request.image_png_b64)
        defended, mask_grid = asd_mask(image, _mask_config(request.settings))
        pixel_count = int(mask_grid.sum())
        return models.MaskResponse(
            defended_png_b64=image_to_b64(defended),
            mask_png_b64=mask_to_b64(mask_grid),
            height=int(mask_grid.shape[0]),
            width=int(mask_grid.shape[1]),
            mask_pixel_count=pixel_count,
            mask_fraction=pixel_count / mask_grid.size,
        )

    @app.post("/detect", response_model=models.DetectResponse)
    def detect(request: models.DetectRequest) -> models.DetectResponse:
        image = image_from_b64(request.image_png_b64)
        detector = SubprocessDetector(request.detector_command)
        try:
            boxes = detect_with_asd(image, detector, _pipeline_config(request.settings))
        except DetectorError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        return models.DetectResponse(boxes=[_box_model(b) for b in boxes])

    @app.post("/inject", response_model=models.InjectResponse)
    def inject(request: models.InjectRequest) -> models.InjectResponse:
        image = image_from_b64(request.image_png_b64)
        patch = request.patch
        spec = PatchSpec(
            kind=patch.kind,
            region=BoundingBox(patch.x1, patch.y1, patch.x2, patch.y2),
            amplitude=patch.amplitude,
            period=patch.period,
            value_center=patch.value_center,
        )
        patched = inject_patch(image, spec, seed=request.seed)
        return models.InjectResponse(image_png_b64=image_to_b64(patched))

    @app.post("/analyze", response_model=models.AnalyzeResponse)
    def analyze(request: models.AnalyzeRequest) -> models.AnalyzeResponse:
        patches = [
            to_grayscale(image_from_b64(item)) for item in request.patches_png_b64
        ]
        stats = spectral_stats(patches, request.levels)
        return models.AnalyzeResponse(
            levels=request.levels,
            patch_count=len(patches),
            per_level_mean=stats.per_level_mean,
            per_level_ci95=stats.per_level_ci95,
        )

    @app.post("/verify-bound", response_model=models.BoundReportModel)
    def verify_bound(request: models.VerifyBoundRequest) -> models.BoundReportModel:
        report = verify_amplitude_bound(
            epsilon=request.epsilon,
            n=request.levels,
            trials=request.trials,
            size=(request.height, request.width),
            seed=DEFAULT_SEED if request.seed is None else request.seed,
        )
        return models.BoundReportModel(**report.to_dict())

    @app.post("/eval", response_model=models.EvalResponse)
    def eval_corpus(request: models.EvalRequest) -> models.EvalResponse:
        items = []
        for entry in request.images:
            region = None
            if entry.patch_region is not None:
                r = entry.patch_region
                region = BoundingBox(r.x1, r.y1, r.x2, r.y2)
            items.append(
                EvalItem(
                    name=entry.name,
                    image=image_from_b64(entry.image_png_b64),
                    gt_boxes=[_box_from_model(b) for b in entry.gt_boxes],
                    patch_region=region,
                )
            )
        if request.detector.kind == "command":
            detector = SubprocessDetector(request.detector.command)

            def detector_for(item: EvalItem):
                return detector

        else:
            detector_for = oracle_detector_factory(
                EvasionRule(
                    overlap_drop_fraction=request.detector.overlap_drop_fraction,
                    blur_restore_fraction=request.detector.blur_restore_fraction,
                )
            )
        config = _pipeline_config(request.settings)
        try:
            score, detections = evaluate_corpus(items, config, detector_for)
        except DetectorError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        return models.EvalResponse(
            ap50=score,
            image_count=len(items),
            detections={
                name: [_box_model(b) for b in boxes]
                for name, boxes in detections.items()
            },
        )

    @app.post("/benchmark", response_model=models.BenchmarkResponse)
    def benchmark(request: models.BenchmarkRequest) -> models.BenchmarkResponse:
        result = run_mask_benchmark(
            height=request.height,
            width=request.width,
            config=_mask_config(request.settings),
            repeats=request.repeats,
            seed=request.seed,
        )
        return models.BenchmarkResponse(**result)

    return app


app = create_app()
