"""Adversarial spectrum defense.

Haar-wavelet decomposition of images, localization and blurring of
high-amplitude regions, multi-level detection aggregation, and verification
tooling for the underlying amplitude bound.
"""

from .analysis import (
    BoundReport,
    SpectralStats,
    dwt_loss,
    spectral_stats,
    verify_amplitude_bound,
)
from .detection import (
    AsdConfig,
    BoundingBox,
    DetectionSet,
    DetectorInterface,
    SubprocessDetector,
    detect_with_asd,
    iou,
    nms,
)
from .errors import DetectorError, InvalidInputError
from .evaluate import EvasionRule, OracleStubDetector, ap50, stub_detector_oracle
from .masking import (
    MaskConfig,
    asd_mask,
    fuse_masks,
    gaussian_blur,
    intensity_map,
    smooth,
    threshold_mask,
    to_grayscale,
)
from .patches import PatchSpec, inject_patch
from .wavelet import (
    DetailTriple,
    WaveletPyramid,
    decompose,
    dwt_step_1d,
    dwt_step_2d,
    idwt_step_1d,
    pad_to_divisible,
    reconstruct,
)

__version__ = "0.1.0"

#: Version of every JSON report and wire schema emitted by this package.
SCHEMA_VERSION = 1

__all__ = [
    "AsdConfig",
    "BoundReport",
    "BoundingBox",
    "DetailTriple",
    "DetectionSet",
    "DetectorError",
    "DetectorInterface",
    "EvasionRule",
    "InvalidInputError",
    "MaskConfig",
    "OracleStubDetector",
    "PatchSpec",
    "SCHEMA_VERSION",
    "SpectralStats",
    "SubprocessDetector",
    "WaveletPyramid",
    "ap50",
    "asd_mask",
    "decompose",
    "detect_with_asd",
    "dwt_loss",
    "dwt_step_1d",
    "dwt_step_2d",
    "fuse_masks",
    "gaussian_blur",
    "idwt_step_1d",
    "inject_patch",
    "intensity_map",
    "iou",
    "nms",
    "pad_to_divisible",
    "reconstruct",
    "smooth",
    "spectral_stats",
    "stub_detector_oracle",
    "threshold_mask",
    "to_grayscale",
    "verify_amplitude_bound",
]
