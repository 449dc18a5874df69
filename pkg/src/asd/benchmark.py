"""Wall-clock benchmark of the masking pipeline on synthetic input."""

from __future__ import annotations

import statistics
import time

import numpy as np

from .errors import InvalidInputError
from .masking import MaskConfig, asd_mask


def run_mask_benchmark(
    height: int = 416,
    width: int = 416,
    config: MaskConfig = MaskConfig(),
    repeats: int = 10,
    seed: int = 0,
) -> dict:
    """Time ``asd_mask`` on a seeded random RGB image.

    Returns mean/median/min/max in milliseconds over ``repeats`` runs after
    one untimed warmup.
    """
    if repeats < 1:
        raise InvalidInputError(f"repeats must be >= 1, got {repeats}")
    rng = np.random.default_rng(seed)
    image = rng.uniform(0.0, 1.0, size=(height, width, 3))
    asd_mask(image, config)  # warmup
    times_ms = []
    for _ in range(repeats):
        start = time.perf_counter()
        asd_mask(image, config)
        times_ms.append((time.perf_counter() - start) * 1e3)
    return {
        "height": height,
        "width": width,
        "max_level": config.n,
        "repeats": repeats,
        "mean_ms": statistics.fmean(times_ms),
        "median_ms": statistics.median(times_ms),
        "min_ms": min(times_ms),
        "max_ms": max(times_ms),
    }
