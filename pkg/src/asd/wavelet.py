"""Haar discrete wavelet transform: single steps, multi-level pyramids, inverses.

Images are 2D float64 numpy arrays (row-major, ``[y, x]``). A decomposition
step maps each non-overlapping 2x2 block ``[[a, b], [c, d]]`` to one
coefficient per sub-band:

    approx      A  = (a + b + c + d) / 2
    horizontal  Dh = (b + d - a - c) / 2     (responds to left-right change)
    vertical    Dv = (c + d - a - b) / 2     (responds to top-bottom change)
    diagonal    Dd = (a + d - b - c) / 2

This is the separable Haar filter pair L = [sqrt(2)/2, sqrt(2)/2],
H = [-sqrt(2)/2, sqrt(2)/2] with odd-index downsampling, written in closed
form on pixel pairs so there is no boundary extension anywhere in the
transform. The four block patterns are orthonormal, which gives exact
energy preservation and an exact inverse.

Only the Haar wavelet is supported; every downstream formula (the per-level
threshold schedule, the amplitude bound) relies on its factor-2 gain per
level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

SQRT2_OVER_2 = math.sqrt(2.0) / 2.0

#: Haar analysis filter pair (low-pass, high-pass).
LOW_PASS = (SQRT2_OVER_2, SQRT2_OVER_2)
HIGH_PASS = (-SQRT2_OVER_2, SQRT2_OVER_2)


def as_int(value, name: str, minimum: int = 0) -> int:
    """Coerce a Python or numpy integer; reject floats and anything below
    ``minimum``."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    out = int(value)
    if out < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return out


def _as_signal(signal) -> np.ndarray:
    arr = np.asarray(signal, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"expected a 1D signal, got shape {arr.shape}")
    return arr


def _as_image(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2D image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"image must be at least 1x1, got {arr.shape}")
    return arr


def dwt_step_1d(signal) -> tuple[np.ndarray, np.ndarray]:
    """Single Haar analysis step on a 1D signal of even length.

    Returns ``(approx, detail)`` with ``approx[t] = (x[2t] + x[2t+1])*sqrt(2)/2``
    and ``detail[t] = (x[2t+1] - x[2t])*sqrt(2)/2``; both are half the input
    length.
    """
    x = _as_signal(signal)
    if x.size == 0 or x.size % 2 != 0:
        raise InvalidInputError(f"signal length must be even and >= 2, got {x.size}")
    even = x[0::2]
    odd = x[1::2]
    approx = (even + odd) * SQRT2_OVER_2
    detail = (odd - even) * SQRT2_OVER_2
    return approx, detail


def idwt_step_1d(approx, detail) -> np.ndarray:
    """Exact inverse of :func:`dwt_step_1d`."""
    a = _as_signal(approx)
    d = _as_signal(detail)
    if a.size != d.size:
        raise InvalidInputError(
            f"approx and detail lengths differ: {a.size} vs {d.size}"
        )
    out = np.empty(2 * a.size, dtype=np.float64)
    out[0::2] = (a - d) * SQRT2_OVER_2
    out[1::2] = (a + d) * SQRT2_OVER_2
    return out


@dataclass(frozen=True)
class DetailTriple:
    """Horizontal, vertical, and diagonal detail grids of one level."""

    d_h: np.ndarray
    d_v: np.ndarray
    d_d: np.ndarray

    def __post_init__(self):
        if not (self.d_h.shape == self.d_v.shape == self.d_d.shape):
            raise InvalidInputError(
                "detail grids must share dimensions, got "
                f"{self.d_h.shape}, {self.d_v.shape}, {self.d_d.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.d_h.shape


@dataclass(frozen=True)
class WaveletPyramid:
    """Multi-level decomposition: detail triples for levels 1..n plus the
    final approximation, with the pre-padding image size recorded so callers
    can crop derived grids back to input geometry."""

    levels: list[DetailTriple]
    approx: np.ndarray
    original_height: int
    original_width: int

    @property
    def depth(self) -> int:
        return len(self.levels)


def _split_blocks(x: np.ndarray):
    """Corner views a, b, c, d of the 2x2 blocks of the last two axes."""
    return (
        x[..., 0::2, 0::2],
        x[..., 0::2, 1::2],
        x[..., 1::2, 0::2],
        x[..., 1::2, 1::2],
    )


def _dwt_step(x: np.ndarray):
    """One analysis step on the last two axes; leading axes are batch.

    Sums are grouped pairwise so constant blocks give exactly zero details
    and an exactly doubled approximation in floating point.
    """
    a, b, c, d = _split_blocks(x)
    approx = ((a + b) + (c + d)) * 0.5
    d_h = ((b + d) - (a + c)) * 0.5
    d_v = ((c + d) - (a + b)) * 0.5
    d_d = ((a + d) - (b + c)) * 0.5
    return approx, d_h, d_v, d_d


def _idwt_step(approx, d_h, d_v, d_d) -> np.ndarray:
    """Inverse of :func:`_dwt_step` (the block transform is orthonormal)."""
    h, w = approx.shape[-2], approx.shape[-1]
    out = np.empty(approx.shape[:-2] + (2 * h, 2 * w), dtype=np.float64)
    out[..., 0::2, 0::2] = ((approx - d_h) - (d_v - d_d)) * 0.5
    out[..., 0::2, 1::2] = ((approx + d_h) - (d_v + d_d)) * 0.5
    out[..., 1::2, 0::2] = ((approx - d_h) + (d_v - d_d)) * 0.5
    out[..., 1::2, 1::2] = ((approx + d_h) + (d_v + d_d)) * 0.5
    return out


def dwt_step_2d(approx_in) -> tuple[np.ndarray, DetailTriple]:
    """Single 2D Haar step. Both dimensions must be even (callers pad first).

    Returns ``(approx_out, details)``; every output grid is exactly half the
    input in each dimension.
    """
    x = _as_image(approx_in)
    h, w = x.shape
    if h % 2 != 0 or w % 2 != 0:
        raise InvalidInputError(f"dimensions must be even, got {h}x{w}")
    approx, d_h, d_v, d_d = _dwt_step(x)
    return approx, DetailTriple(d_h, d_v, d_d)


def decompose(image, n: int, original_size: tuple[int, int] | None = None) -> WaveletPyramid:
    """Full n-level decomposition of an image whose dimensions 2^n divides.

    Args:
        image: 2D array, already padded (see :func:`pad_to_divisible`).
        n: number of levels, >= 1.
        original_size: pre-padding (height, width) to record on the pyramid;
            defaults to the input's own size.

    Returns:
        A :class:`WaveletPyramid` with ``levels[i-1]`` holding the level-i
        details and ``approx`` the level-n approximation.
    """
    x = _as_image(image)
    n = as_int(n, "level count", minimum=1)
    h, w = x.shape
    divisor = 2**n
    if h % divisor != 0 or w % divisor != 0:
        raise InvalidInputError(
            f"dimensions {h}x{w} are not divisible by 2^{n}={divisor}; pad first"
        )
    if original_size is None:
        original_size = (h, w)

    levels: list[DetailTriple] = []
    approx = x
    for _ in range(n):
        approx, d_h, d_v, d_d = _dwt_step(approx)
        levels.append(DetailTriple(d_h, d_v, d_d))
    return WaveletPyramid(
        levels=levels,
        approx=approx,
        original_height=int(original_size[0]),
        original_width=int(original_size[1]),
    )


def reconstruct(pyramid: WaveletPyramid) -> np.ndarray:
    """Invert :func:`decompose`, returning the image at its padded size."""
    if pyramid.depth < 1:
        raise InvalidInputError("pyramid has no levels")
    approx = _as_image(pyramid.approx)
    if approx.shape != pyramid.levels[-1].shape:
        raise InvalidInputError(
            f"approx shape {approx.shape} does not match deepest level "
            f"{pyramid.levels[-1].shape}"
        )
    for i, triple in enumerate(reversed(pyramid.levels)):
        level_index = pyramid.depth - i  # walking from level n back to 1
        if triple.shape != approx.shape:
            raise InvalidInputError(
                f"level {level_index} shape {triple.shape} inconsistent with "
                f"running approximation {approx.shape}"
            )
        approx = _idwt_step(approx, triple.d_h, triple.d_v, triple.d_d)
    return approx


def pad_to_divisible(image, n: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Pad bottom/right by edge replication until 2^n divides both dimensions.

    Returns ``(padded, (original_height, original_width))``. ``n = 0`` is the
    identity.
    """
    x = _as_image(image)
    n = as_int(n, "level count")
    h, w = x.shape
    divisor = 2**n
    pad_h = (-h) % divisor
    pad_w = (-w) % divisor
    if pad_h == 0 and pad_w == 0:
        return x, (h, w)
    padded = np.pad(x, ((0, pad_h), (0, pad_w)), mode="edge")
    return padded, (h, w)
