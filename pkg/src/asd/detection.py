"""Bounding boxes, IoU/NMS, the detector seam, and multi-level aggregation.

The defense runs the masking pipeline at several maximum decomposition
levels, feeds each defended image to the detector, pools all resulting boxes,
and removes duplicates with one class-aware NMS pass. Level 0 means "no
masking": the detector sees the original image.
"""

from __future__ import annotations

import abc
import json
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DetectorError, InvalidInputError
from .masking import MaskConfig, asd_mask, validate_rgb
from .wavelet import as_int


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned detection: corners (x1, y1) < (x2, y2), score in [0, 1]."""

    x1: float
    y1: float
    x2: float
    y2: float
    score: float = 1.0
    label: int = 0

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidInputError(
                f"box corners must be ordered, got ({self.x1}, {self.y1}, "
                f"{self.x2}, {self.y2})"
            )
        if not 0.0 <= self.score <= 1.0:
            raise InvalidInputError(f"score must be in [0, 1], got {self.score}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def to_dict(self) -> dict:
        return {
            "x1": self.x1,
            "y1": self.y1,
            "x2": self.x2,
            "y2": self.y2,
            "score": self.score,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundingBox":
        try:
            return cls(
                x1=float(data["x1"]),
                y1=float(data["y1"]),
                x2=float(data["x2"]),
                y2=float(data["y2"]),
                score=float(data.get("score", 1.0)),
                label=int(data.get("label", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed box record: {data!r}") from exc


@dataclass
class DetectionSet:
    """Boxes produced by one detector invocation, tagged with the masking
    level that produced the input image (-1 when untagged)."""

    boxes: list[BoundingBox]
    source_level: int = -1


@dataclass(frozen=True)
class AsdConfig:
    """Full pipeline configuration: threshold, aggregated levels, NMS IoU,
    and the blur kernel shared with :class:`MaskConfig`."""

    theta: float = 0.17
    levels: tuple[int, ...] = (0, 1, 2, 3)
    nms_iou: float = 0.4
    blur_sigma: float = 10.0
    blur_radius: int = 20

    def __post_init__(self):
        levels = tuple(as_int(v, "level") for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) == 0:
            raise InvalidInputError("levels must be non-empty")
        if any(v < 0 for v in levels):
            raise InvalidInputError(f"levels must be >= 0, got {levels}")
        if len(set(levels)) != len(levels):
            raise InvalidInputError(f"levels must be distinct, got {levels}")
        if not 0.0 < self.nms_iou < 1.0:
            raise InvalidInputError(f"nms_iou must be in (0, 1), got {self.nms_iou}")
        # Delegate theta/blur validation.
        self.mask_config(max(levels))

    def mask_config(self, n: int) -> MaskConfig:
        return MaskConfig(
            theta=self.theta,
            n=n,
            blur_sigma=self.blur_sigma,
            blur_radius=self.blur_radius,
        )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _canonical_key(box: BoundingBox):
    # Total order: score descending, then geometry, then label. Sorting on
    # this key before the greedy pass makes NMS independent of input order.
    return (-box.score, box.x1, box.y1, box.x2, box.y2, box.label)


def nms(boxes: list[BoundingBox], iou_threshold: float) -> list[BoundingBox]:
    """Greedy class-aware non-maximum suppression.

    Boxes are visited in canonical (score-descending) order; a box is dropped
    if it overlaps an already-kept box of the same label with IoU >= the
    threshold (boxes exactly at the threshold are suppressed). The result is
    sorted by descending score.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise InvalidInputError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    kept: list[BoundingBox] = []
    for box in sorted(boxes, key=_canonical_key):
        suppressed = any(
            box.label == other.label and iou(box, other) >= iou_threshold
            for other in kept
        )
        if not suppressed:
            kept.append(box)
    return kept


class DetectorInterface(abc.ABC):
    """Seam for object detectors. Implementations must be deterministic for
    identical pixels and safe to call from multiple threads (or cheap to
    instantiate per level)."""

    @abc.abstractmethod
    def run(self, image: np.ndarray) -> DetectionSet:
        """Detect objects in an RGB image, returning a DetectionSet."""


class SubprocessDetector(DetectorInterface):
    """Detector invoked as an external command, once per image.

    The command receives the path of a temporary PNG as its last argument and
    must print a single JSON object ``{"boxes": [{"x1": .., "y1": .., "x2":
    .., "y2": .., "score": .., "label": ..}, ...]}`` on stdout. A nonzero
    exit status or unparseable output raises :class:`DetectorError`.
    """

    def __init__(self, command: str, timeout: float | None = 60.0):
        if not command or not command.strip():
            raise InvalidInputError("detector command must be non-empty")
        self.command = command
        self.timeout = timeout

    def run(self, image: np.ndarray) -> DetectionSet:
        from .imgio import save_image

        with tempfile.TemporaryDirectory(prefix="asd-detect-") as tmp:
            path = Path(tmp) / "frame.png"
            save_image(image, path)
            argv = shlex.split(self.command) + [str(path)]
            try:
                proc = subprocess.run(
                    argv, capture_output=True, text=True, timeout=self.timeout
                )
            except (OSError, subprocess.SubprocessError) as exc:
                raise DetectorError(f"detector command failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise DetectorError(
                f"detector exited with status {proc.returncode}: "
                f"{proc.stderr.strip()[:500]}"
            )
        return DetectionSet(boxes=parse_detector_output(proc.stdout))


def parse_detector_output(text: str) -> list[BoundingBox]:
    """Parse the subprocess detector wire format into boxes."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectorError(f"unparseable detector output: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("boxes"), list):
        raise DetectorError('detector output must be {"boxes": [...]}')
    try:
        return [BoundingBox.from_dict(item) for item in payload["boxes"]]
    except InvalidInputError as exc:
        raise DetectorError(str(exc)) from exc


def detect_with_asd(
    image: np.ndarray, detector: DetectorInterface, config: AsdConfig
) -> list[BoundingBox]:
    """Run the detector on each per-level defended image and merge with NMS.

    Deterministic for a deterministic detector: the pooled boxes are
    canonically ordered before suppression, so neither level order nor any
    parallel scheduling of levels can change the output.
    """
    arr = validate_rgb(image)
    pooled: list[BoundingBox] = []
    for level in config.levels:
        if level == 0:
            defended = arr
        else:
            defended, _ = asd_mask(arr, config.mask_config(level))
        try:
            result = detector.run(defended)
        except DetectorError as exc:
            raise DetectorError(f"detector failed at level {level}: {exc}") from exc
        pooled.extend(result.boxes)
    return nms(pooled, config.nms_iou)
