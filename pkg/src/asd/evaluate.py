"""Ground truth handling, AP50 scoring, and the oracle stub detector.

Ground truth and detection files share one format: a JSON object mapping
image filename to a list of box records. Ground-truth scores are fixed at
1.0 on load.

The oracle stub detector makes the pipeline testable without any neural
network. It is bound to one image's ground truth, the injected patch region,
and the un-defended reference pixels; its evasion rule is an explicit test
contract, not a claim about real detectors: a box is dropped while the patch
is "live" (insufficiently altered by the defense) and covers enough of the
box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .detection import (
    AsdConfig,
    BoundingBox,
    DetectionSet,
    DetectorInterface,
    detect_with_asd,
    iou,
)
from .errors import InvalidInputError

GroundTruth = dict[str, list[BoundingBox]]

_PIXEL_CHANGE_EPS = 1e-12


def load_ground_truth(path) -> GroundTruth:
    """Read a filename -> box-list JSON file; scores are forced to 1.0."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such ground-truth file: {p}")
    with open(p, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise InvalidInputError(f"ground truth must be a JSON object, got {type(raw)}")
    gt: GroundTruth = {}
    for name, items in raw.items():
        boxes = []
        for item in items:
            box = BoundingBox.from_dict(item)
            boxes.append(
                BoundingBox(box.x1, box.y1, box.x2, box.y2, score=1.0, label=box.label)
            )
        gt[name] = boxes
    return gt


def save_boxes(boxes_by_image: dict[str, list[BoundingBox]], path) -> None:
    """Write a filename -> box-list mapping as JSON."""
    payload = {
        name: [box.to_dict() for box in boxes]
        for name, boxes in boxes_by_image.items()
    }
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ap50(
    detections: dict[str, list[BoundingBox]], gt: GroundTruth
) -> float:
    """Single-class all-point interpolated average precision at IoU 0.5.

    Detections are pooled across images, sorted by descending score, and
    greedily matched one-to-one to same-label ground-truth boxes at
    IoU >= 0.5. Detections for images absent from the ground truth count as
    false positives.
    """
    total_gt = sum(len(boxes) for boxes in gt.values())
    if total_gt == 0:
        raise InvalidInputError("ground truth contains no boxes")

    pooled = [
        (name, box)
        for name, boxes in detections.items()
        for box in boxes
    ]
    # Score-descending with a deterministic tie order.
    pooled.sort(key=lambda it: (-it[1].score, it[0], it[1].x1, it[1].y1, it[1].x2, it[1].y2))

    matched: dict[str, set[int]] = {name: set() for name in gt}
    tp = np.zeros(len(pooled))
    for rank, (name, box) in enumerate(pooled):
        candidates = gt.get(name, [])
        best_iou = 0.0
        best_idx = -1
        for idx, truth in enumerate(candidates):
            if idx in matched[name] or truth.label != box.label:
                continue
            overlap = iou(box, truth)
            if overlap > best_iou:
                best_iou = overlap
                best_idx = idx
        if best_idx >= 0 and best_iou >= 0.5:
            matched[name].add(best_idx)
            tp[rank] = 1.0

    if len(pooled) == 0:
        return 0.0
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(1.0 - tp)
    recall = cum_tp / total_gt
    precision = cum_tp / (cum_tp + cum_fp)

    # All-point interpolation: monotone precision envelope from the right,
    # integrated over recall.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_recall = 0.0
    for r, p in zip(recall, envelope):
        ap += (r - prev_recall) * p
        prev_recall = r
    return float(ap)


@dataclass(frozen=True)
class EvasionRule:
    """When the stub considers an attack successful.

    A box is dropped if the live patch covers at least
    ``overlap_drop_fraction`` of its area; the patch counts as dead (and all
    boxes are restored) once at least ``blur_restore_fraction`` of its pixels
    differ from the reference image.
    """

    overlap_drop_fraction: float = 0.5
    blur_restore_fraction: float = 0.9


class OracleStubDetector(DetectorInterface):
    """Ground-truth detector for one image with an explicit evasion rule."""

    def __init__(
        self,
        gt_boxes: list[BoundingBox],
        patch_region: BoundingBox | None = None,
        reference: np.ndarray | None = None,
        rule: EvasionRule = EvasionRule(),
    ):
        self.gt_boxes = [
            BoundingBox(b.x1, b.y1, b.x2, b.y2, score=1.0, label=b.label)
            for b in gt_boxes
        ]
        self.patch_region = patch_region
        self.reference = None if reference is None else np.asarray(reference, dtype=np.float64)
        self.rule = rule

    def run(self, image: np.ndarray) -> DetectionSet:
        if self.patch_region is None or self.reference is None:
            return DetectionSet(boxes=list(self.gt_boxes))
        if self.reference.shape != np.asarray(image).shape:
            raise InvalidInputError(
                f"reference shape {self.reference.shape} does not match image "
                f"shape {np.asarray(image).shape}"
            )
        y1 = int(round(self.patch_region.y1))
        x1 = int(round(self.patch_region.x1))
        y2 = int(round(self.patch_region.y2))
        x2 = int(round(self.patch_region.x2))
        ref_patch = self.reference[y1:y2, x1:x2, :]
        img_patch = np.asarray(image, dtype=np.float64)[y1:y2, x1:x2, :]
        changed = np.abs(img_patch - ref_patch).max(axis=2) > _PIXEL_CHANGE_EPS
        if changed.size == 0 or changed.mean() >= self.rule.blur_restore_fraction:
            return DetectionSet(boxes=list(self.gt_boxes))

        kept = []
        for box in self.gt_boxes:
            ix = min(box.x2, float(x2)) - max(box.x1, float(x1))
            iy = min(box.y2, float(y2)) - max(box.y1, float(y1))
            covered = max(ix, 0.0) * max(iy, 0.0) / box.area
            if covered < self.rule.overlap_drop_fraction:
                kept.append(box)
        return DetectionSet(boxes=kept)


def stub_detector_oracle(
    gt_boxes: list[BoundingBox],
    patch_region: BoundingBox | None = None,
    reference: np.ndarray | None = None,
    rule: EvasionRule = EvasionRule(),
) -> DetectorInterface:
    """Factory form of :class:`OracleStubDetector`."""
    return OracleStubDetector(gt_boxes, patch_region, reference, rule)


@dataclass
class EvalItem:
    """One corpus entry: the (possibly attacked) image, its ground truth, and
    the injected patch region if any."""

    name: str
    image: np.ndarray
    gt_boxes: list[BoundingBox]
    patch_region: BoundingBox | None = None


def evaluate_corpus(
    items: list[EvalItem],
    config: AsdConfig,
    detector_for: Callable[[EvalItem], DetectorInterface],
) -> tuple[float, dict[str, list[BoundingBox]]]:
    """Run the full pipeline over a corpus and score it.

    ``detector_for`` builds the per-image detector (an oracle stub bound to
    the item, or a shared subprocess detector). Returns (AP50, detections).
    """
    detections: dict[str, list[BoundingBox]] = {}
    for item in items:
        detector = detector_for(item)
        detections[item.name] = detect_with_asd(item.image, detector, config)
    gt = {item.name: item.gt_boxes for item in items}
    return ap50(detections, gt), detections


def oracle_detector_factory(rule: EvasionRule = EvasionRule()):
    """Per-item oracle stub factory for :func:`evaluate_corpus`."""

    def factory(item: EvalItem) -> DetectorInterface:
        return OracleStubDetector(
            item.gt_boxes,
            patch_region=item.patch_region,
            reference=item.image,
            rule=rule,
        )

    return factory
