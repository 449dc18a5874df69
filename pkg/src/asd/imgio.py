"""Image file I/O: 8-bit PNG in, float64 [0, 1] arrays out, and back.

Saving quantizes with round-half-away (via ``np.rint`` after scaling), so
save-load-save is byte-stable for any image that originated from 8-bit data.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvalidInputError


def load_image(path) -> np.ndarray:
    """Load an image file as an (H, W, 3) float64 array in [0, 1]."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    try:
        with Image.open(p) as img:
            rgb = img.convert("RGB")
            return np.asarray(rgb, dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise InvalidInputError(f"could not decode image {p}: {exc}") from exc


def save_image(image, path) -> None:
    """Write an (H, W, 3) array in [0, 1] as an 8-bit PNG."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    data = _quantize(arr)
    Image.fromarray(data, mode="RGB").save(Path(path), format="PNG")


def save_mask(mask, path) -> None:
    """Write a {0, 1} mask as a 1-channel 8-bit PNG (0 -> 0, 1 -> 255)."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D mask, got shape {arr.shape}")
    data = (arr.astype(np.uint8) * 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(Path(path), format="PNG")


def load_mask(path) -> np.ndarray:
    """Load a 1-channel mask PNG back to a {0, 1} uint8 grid."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such mask file: {p}")
    with Image.open(p) as img:
        gray = np.asarray(img.convert("L"))
    return (gray >= 128).astype(np.uint8)


def _quantize(arr: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_image_png(image) -> bytes:
    """Encode an (H, W, 3) array in [0, 1] to PNG bytes."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidInputError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray(_quantize(arr), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_image_png(data: bytes) -> np.ndarray:
    """Decode PNG (or any Pillow-readable) bytes to an (H, W, 3) array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise InvalidInputError(f"could not decode image bytes: {exc}") from exc


def encode_mask_png(mask) -> bytes:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D mask, got shape {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray((arr.astype(np.uint8) * 255), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def image_to_b64(image) -> str:
    return base64.b64encode(encode_image_png(image)).decode("ascii")


def image_from_b64(text: str) -> np.ndarray:
    try:
        data = base64.b64decode(text, validate=True)
    except (ValueError, TypeError) as exc:
        raise InvalidInputError(f"invalid base64 image payload: {exc}") from exc
    return decode_image_png(data)


def mask_to_b64(mask) -> str:
    return base64.b64encode(encode_mask_png(mask)).decode("ascii")
