"""Synthetic perturbation injection for building test corpora.

A patch spec names a region of the image and a fill pattern. Regions are
half-open pixel rectangles derived from the box corners, so a region
(0, 0, 10, 10) covers exactly the 10x10 pixels with indices 0..9.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import BoundingBox
from .errors import InvalidInputError
from .wavelet import as_int

PATCH_KINDS = (
    "checkerboard",
    "uniform-noise",
    "tiled-texture",
    "range-limited-noise",
)


@dataclass(frozen=True)
class PatchSpec:
    """Where and what to inject.

    ``amplitude`` is the peak-to-peak value range of the pattern; fills are
    centered on ``value_center`` and clipped to [0, 1] after composition.
    ``period`` is the spatial period in pixels of the checkerboard (a
    period-2 checkerboard alternates single pixels) and the tile edge of the
    tiled texture.
    """

    kind: str
    region: BoundingBox
    amplitude: float
    period: int = 2
    value_center: float = 0.5

    def __post_init__(self):
        if self.kind not in PATCH_KINDS:
            raise InvalidInputError(
                f"unknown patch kind {self.kind!r}, expected one of {PATCH_KINDS}"
            )
        if self.amplitude < 0:
            raise InvalidInputError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "period", as_int(self.period, "period", minimum=1))

    def pixel_rect(self) -> tuple[int, int, int, int]:
        """(y1, x1, y2, x2) integer pixel bounds, half-open."""
        return (
            int(round(self.region.y1)),
            int(round(self.region.x1)),
            int(round(self.region.y2)),
            int(round(self.region.x2)),
        )


def inject_patch(image: np.ndarray, spec: PatchSpec, seed: int = 0) -> np.ndarray:
    """Return a copy of the image with the patch pattern written into the
    region. Pixels outside the region are untouched."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    y1, x1, y2, x2 = spec.pixel_rect()
    h, w = arr.shape[0], arr.shape[1]
    if y1 < 0 or x1 < 0 or y2 > h or x2 > w:
        raise InvalidInputError(
            f"region ({x1}, {y1}, {x2}, {y2}) outside image bounds {w}x{h}"
        )
    rh, rw = y2 - y1, x2 - x1
    rng = np.random.default_rng(seed)
    half = spec.amplitude / 2.0
    center = spec.value_center

    if spec.kind == "checkerboard":
        cell = max(1, spec.period // 2)
        yy, xx = np.meshgrid(np.arange(rh), np.arange(rw), indexing="ij")
        parity = ((yy // cell) + (xx // cell)) % 2
        pattern = np.where(parity == 0, center + half, center - half)
        fill = np.repeat(pattern[:, :, None], 3, axis=2)
    elif spec.kind in ("uniform-noise", "range-limited-noise"):
        fill = rng.uniform(center - half, center + half, size=(rh, rw, 3))
    else:  # tiled-texture
        tile = rng.uniform(center - half, center + half, size=(spec.period, spec.period, 3))
        reps = (-(-rh // spec.period), -(-rw // spec.period), 1)
        fill = np.tile(tile, reps)[:rh, :rw, :]

    out = arr.copy()
    out[y1:y2, x1:x2, :] = np.clip(fill, 0.0, 1.0)
    return out
