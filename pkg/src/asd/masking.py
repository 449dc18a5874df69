"""Spectral masking: locate high-amplitude regions of an image and blur them.

The pipeline converts the RGB input to grayscale, decomposes it into a Haar
pyramid, builds a per-level intensity map from the detail coefficients,
thresholds each map with a level-scaled threshold, fuses the per-level masks
by nearest-neighbor upsampling and union, and finally replaces the masked
pixels with a Gaussian-blurred copy of the image. Pixels outside the mask are
returned bit-identical to the input.

RGB images are float64 arrays of shape ``(H, W, 3)`` with values in [0, 1].
Binary masks are uint8 arrays of shape ``(H, W)`` with values in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .errors import InvalidInputError
from .wavelet import DetailTriple, as_int, decompose, pad_to_divisible

#: ITU-R BT.601 luma weights for grayscale conversion.
GRAYSCALE_WEIGHTS = (0.299, 0.587, 0.114)

_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class MaskConfig:
    """Parameters of the masking pipeline.

    ``theta`` is the base detection threshold in pixel-intensity units; level
    i uses ``2**(i-1) * theta``. ``n`` is the maximum decomposition level
    (``n = 0`` disables masking entirely). ``blur_sigma`` and ``blur_radius``
    shape the Gaussian kernel used on detected regions; the defaults are wide
    enough to destroy fine texture across a masked patch.
    """

    theta: float = 0.17
    n: int = 3
    blur_sigma: float = 10.0
    blur_radius: int = 20

    def __post_init__(self):
        if not self.theta > 0:
            raise InvalidInputError(f"theta must be > 0, got {self.theta}")
        object.__setattr__(self, "n", as_int(self.n, "n"))
        if not self.blur_sigma > 0:
            raise InvalidInputError(f"blur_sigma must be > 0, got {self.blur_sigma}")
        object.__setattr__(
            self, "blur_radius", as_int(self.blur_radius, "blur_radius", minimum=1)
        )


def validate_rgb(image) -> np.ndarray:
    """Check an array is (H, W, 3) float with values in [0, 1]; return it as
    float64."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"image must be at least 1x1, got shape {arr.shape}")
    lo = float(arr.min())
    hi = float(arr.max())
    if lo < -_RANGE_SLACK or hi > 1.0 + _RANGE_SLACK:
        raise InvalidInputError(
            f"pixel values must lie in [0, 1], got range [{lo}, {hi}]"
        )
    return arr


def to_grayscale(image) -> np.ndarray:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    return arr @ np.asarray(GRAYSCALE_WEIGHTS, dtype=np.float64)


def intensity_map(details: DetailTriple) -> np.ndarray:
    """Per-pixel l2 norm across the three detail directions."""
    return np.sqrt(details.d_h**2 + details.d_v**2 + details.d_d**2)


def smooth(intensity) -> np.ndarray:
    """3x3 neighborhood mean with edge replication at the borders."""
    arr = np.asarray(intensity, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D map, got shape {arr.shape}")
    padded = np.pad(arr, 1, mode="edge")
    acc = np.zeros_like(arr)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy : dy + arr.shape[0], dx : dx + arr.shape[1]]
    return acc / 9.0


def threshold_for_level(level: int, theta: float) -> float:
    """Threshold at decomposition level i: 2^(i-1) * theta.

    The approximation feeding level i has gained a factor 2 per preceding
    level, so the detail amplitudes scale the same way.
    """
    level = as_int(level, "level", minimum=1)
    if not theta > 0:
        raise InvalidInputError(f"theta must be > 0, got {theta}")
    return 2.0 ** (level - 1) * theta


def threshold_mask(intensity, level: int, theta: float) -> np.ndarray:
    """Binary mask: 1 where the map strictly exceeds the level threshold.

    Strictness matters: perturbations confined to an interval of width theta
    reach the threshold exactly in the extremal case and must not trip it.
    """
    arr = np.asarray(intensity, dtype=np.float64)
    return (arr > threshold_for_level(level, theta)).astype(np.uint8)


def fuse_masks(masks: list[np.ndarray], target_size: tuple[int, int]) -> np.ndarray:
    """Union of per-level masks, each upsampled to ``target_size``.

    ``masks[i-1]`` is the level-i mask and must have dimensions
    ``target / 2^i``; each of its bits expands to a 2^i x 2^i block (masks are
    sets of covered pixels, so replication, not filtering).
    """
    th, tw = int(target_size[0]), int(target_size[1])
    fused = np.zeros((th, tw), dtype=np.uint8)
    for i, mask in enumerate(masks, start=1):
        arr = np.asarray(mask, dtype=np.uint8)
        factor = 2**i
        expected = (th // factor, tw // factor)
        if th % factor or tw % factor or arr.shape != expected:
            raise InvalidInputError(
                f"level {i} mask has shape {arr.shape}, expected {expected} "
                f"for target {th}x{tw}"
            )
        up = arr.repeat(factor, axis=0).repeat(factor, axis=1)
        fused |= up
    return fused


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Normalized 1D Gaussian taps on [-radius, radius]."""
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be > 0, got {sigma}")
    radius = as_int(radius, "radius", minimum=1)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(image, sigma: float, radius: int) -> np.ndarray:
    """Separable Gaussian blur per channel with edge-replicated borders."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    kernel = gaussian_kernel(sigma, radius)
    out = np.empty_like(arr)
    for ch in range(3):
        tmp = convolve1d(arr[:, :, ch], kernel, axis=0, mode="nearest")
        out[:, :, ch] = convolve1d(tmp, kernel, axis=1, mode="nearest")
    return out


def compute_mask(image, config: MaskConfig) -> np.ndarray:
    """Fused adversarial-region mask of an RGB image, at the image's size.

    The mask is computed on the padded grayscale image and cropped back, so
    it aligns with input geometry regardless of padding.
    """
    arr = validate_rgb(image)
    h, w = arr.shape[0], arr.shape[1]
    if config.n == 0:
        return np.zeros((h, w), dtype=np.uint8)
    gray = to_grayscale(arr)
    padded, (oh, ow) = pad_to_divisible(gray, config.n)
    pyramid = decompose(padded, config.n, original_size=(oh, ow))
    per_level = [
        threshold_mask(smooth(intensity_map(triple)), level, config.theta)
        for level, triple in enumerate(pyramid.levels, start=1)
    ]
    fused = fuse_masks(per_level, padded.shape)
    return fused[:oh, :ow]


def asd_mask(image, config: MaskConfig) -> tuple[np.ndarray, np.ndarray]:
    """Detect adversarial regions and blur them out.

    Returns ``(defended, mask)``. Masked pixels come from a globally blurred
    copy of the image; unmasked pixels are bit-identical to the input. With
    ``config.n == 0`` the image passes through untouched with an empty mask.
    """
    arr = validate_rgb(image)
    mask = compute_mask(arr, config)
    defended = arr.copy()
    if mask.any():
        blurred = gaussian_blur(arr, config.blur_sigma, config.blur_radius)
        selected = mask.astype(bool)
        defended[selected] = blurred[selected]
    return defended, mask
