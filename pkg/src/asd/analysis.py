"""Spectral amplitude statistics, the detail-energy loss, and the
amplitude-bound verifier.

The bound being verified: if every pixel of an image satisfies |pixel| <=
eps, then every level-i detail coefficient, and the per-pixel l2 norm across
the three directions, satisfies |coef| <= 2^i * eps. Each 2x2 analysis step
is an orthonormal map of four values bounded by 2^i * eps, so the combined
detail magnitude of the step is at most 2^(i+1) * eps, with equality exactly
at the constant-sign and alternating-sign corner patterns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .errors import InvalidInputError
from .masking import gaussian_kernel
from .wavelet import WaveletPyramid, _dwt_step, as_int, decompose, pad_to_divisible

#: Seed used by randomized searches unless overridden.
DEFAULT_SEED = 20240917

_BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpectralStats:
    """Per-level mean absolute detail amplitude (averaged over directions and
    positions, scaled by 10 / 2^i) with 95% confidence half-widths across the
    patch set."""

    per_level_mean: list[float]
    per_level_ci95: list[float]

    @property
    def depth(self) -> int:
        return len(self.per_level_mean)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of the amplitude-bound check.

    ``max_observed_ratio`` is the worst ||D_i||_inf / (2^i * eps) seen over
    the randomized trials; ``exhaustive_max_detail`` and
    ``exhaustive_max_approx`` are the single-step maxima over all 16
    sign-extremal 2x2 blocks (both equal 2*eps when the bound is tight).
    """

    epsilon: float
    levels_checked: int
    max_observed_ratio: float
    violated: bool
    trials: int = 0
    seed: int = DEFAULT_SEED
    exhaustive_max_detail: float = 0.0
    exhaustive_max_approx: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "levels_checked": self.levels_checked,
            "max_observed_ratio": self.max_observed_ratio,
            "violated": self.violated,
            "trials": self.trials,
            "seed": self.seed,
            "exhaustive_max_detail": self.exhaustive_max_detail,
            "exhaustive_max_approx": self.exhaustive_max_approx,
        }


def _level_scale(level: int) -> float:
    return 10.0 / 2.0**level


def spectral_stats(patches: list[np.ndarray], n: int) -> SpectralStats:
    """Mean absolute detail amplitude per level over a set of gray patches.

    The level-i mean pools |coefficient| over all patches, directions, and
    positions, then scales by 10 / 2^i. The confidence half-width is the
    normal-approximation 95% interval (1.96 * stderr) across per-patch means;
    it is 0 for a single patch. Patches whose dimensions 2^n does not divide
    are edge-padded first.
    """
    n = as_int(n, "level count", minimum=1)
    if len(patches) == 0:
        raise InvalidInputError("at least one patch is required")

    abs_sums = np.zeros(n)
    counts = np.zeros(n)
    per_patch_means = np.zeros((len(patches), n))
    for p_idx, patch in enumerate(patches):
        padded, _ = pad_to_divisible(patch, n)
        pyramid = decompose(padded, n)
        for lvl, triple in enumerate(pyramid.levels, start=1):
            stacked = np.abs(np.stack([triple.d_h, triple.d_v, triple.d_d]))
            abs_sums[lvl - 1] += stacked.sum()
            counts[lvl - 1] += stacked.size
            per_patch_means[p_idx, lvl - 1] = stacked.mean() * _level_scale(lvl)

    means = [
        float(abs_sums[i] / counts[i] * _level_scale(i + 1)) for i in range(n)
    ]
    if len(patches) == 1:
        ci = [0.0] * n
    else:
        stderr = per_patch_means.std(axis=0, ddof=1) / np.sqrt(len(patches))
        ci = [float(1.96 * s) for s in stderr]
    return SpectralStats(per_level_mean=means, per_level_ci95=ci)


def dwt_loss(pyramid: WaveletPyramid) -> float:
    """Detail-energy loss: sum over levels i of (1/2^i) times the squared
    Frobenius norms of the three detail grids. Zero iff all details vanish."""
    total = 0.0
    for lvl, triple in enumerate(pyramid.levels, start=1):
        energy = (
            float(np.sum(triple.d_h**2))
            + float(np.sum(triple.d_v**2))
            + float(np.sum(triple.d_d**2))
        )
        total += energy / 2.0**lvl
    return total


def amplitude_ratio(image: np.ndarray, epsilon: float, n: int) -> float:
    """Worst per-level ratio of observed detail amplitude to 2^i * epsilon.

    The amplitude at a pixel is the l2 norm across the three directions,
    which dominates each individual coefficient.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    arr = np.asarray(image, dtype=np.float64)
    return float(_batched_ratio(arr[None, ...], epsilon, n))


def _batched_ratio(batch: np.ndarray, epsilon: float, n: int) -> float:
    """Max amplitude ratio over a (B, H, W) stack of images."""
    h, w = batch.shape[-2], batch.shape[-1]
    divisor = 2**n
    if h % divisor != 0 or w % divisor != 0:
        raise InvalidInputError(
            f"size {h}x{w} is not divisible by 2^{n}={divisor}"
        )
    worst = 0.0
    approx = batch
    for lvl in range(1, n + 1):
        approx, d_h, d_v, d_d = _dwt_step(approx)
        magnitude = np.sqrt(d_h**2 + d_v**2 + d_d**2)
        ratio = float(magnitude.max()) / (2.0**lvl * epsilon)
        worst = max(worst, ratio)
    return worst


def _exhaustive_corner_step(epsilon: float) -> tuple[float, float]:
    """Max single-step |detail| and |approx| over all 16 blocks with entries
    in {-eps, +eps}."""
    max_detail = 0.0
    max_approx = 0.0
    for a, b, c, d in itertools.product((-epsilon, epsilon), repeat=4):
        block = np.array([[a, b], [c, d]], dtype=np.float64)
        approx, d_h, d_v, d_d = _dwt_step(block)
        max_detail = max(
            max_detail,
            abs(float(d_h[0, 0])),
            abs(float(d_v[0, 0])),
            abs(float(d_d[0, 0])),
        )
        max_approx = max(max_approx, abs(float(approx[0, 0])))
    return max_detail, max_approx


def verify_amplitude_bound(
    epsilon: float,
    n: int,
    trials: int,
    size: tuple[int, int] = (32, 32),
    seed: int = DEFAULT_SEED,
    chunk: int = 4096,
) -> BoundReport:
    """Search for violations of the amplitude bound.

    Two phases: an exhaustive sweep of all sign-extremal 2x2 blocks (whose
    single-step maxima must equal 2*eps), and ``trials`` random images with
    entries uniform in [-eps, eps] decomposed to depth ``n``, checking every
    level against 2^i * eps. A violation is reported, never raised.
    """
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    n = as_int(n, "level count", minimum=1)
    trials = as_int(trials, "trials")
    h, w = int(size[0]), int(size[1])
    divisor = 2**n
    if h % divisor != 0 or w % divisor != 0:
        raise InvalidInputError(f"size {h}x{w} is not divisible by 2^{n}={divisor}")

    max_detail, max_approx = _exhaustive_corner_step(epsilon)

    rng = np.random.default_rng(seed)
    worst = 0.0
    remaining = int(trials)
    while remaining > 0:
        batch_size = min(chunk, remaining)
        batch = rng.uniform(-epsilon, epsilon, size=(batch_size, h, w))
        worst = max(worst, _batched_ratio(batch, epsilon, n))
        remaining -= batch_size

    return BoundReport(
        epsilon=float(epsilon),
        levels_checked=n,
        max_observed_ratio=worst,
        violated=worst > 1.0 + _BOUND_TOLERANCE,
        trials=int(trials),
        seed=int(seed),
        exhaustive_max_detail=max_detail,
        exhaustive_max_approx=max_approx,
    )


def uniform_noise_patches(
    count: int, size: tuple[int, int] = (64, 64), seed: int = DEFAULT_SEED
) -> list[np.ndarray]:
    """High-contrast surrogate patches: iid uniform pixels in [0, 1]."""
    rng = np.random.default_rng(seed)
    h, w = int(size[0]), int(size[1])
    return [rng.uniform(0.0, 1.0, size=(h, w)) for _ in range(count)]


def lowpass_noise_patches(
    count: int,
    size: tuple[int, int] = (64, 64),
    seed: int = DEFAULT_SEED,
    sigma: float = 3.0,
) -> list[np.ndarray]:
    """Benign-like surrogate patches: Gaussian-smoothed uniform noise."""
    rng = np.random.default_rng(seed)
    h, w = int(size[0]), int(size[1])
    kernel = gaussian_kernel(sigma, max(1, int(round(3 * sigma))))
    patches = []
    for _ in range(count):
        noise = rng.uniform(0.0, 1.0, size=(h, w))
        smoothed = convolve1d(noise, kernel, axis=0, mode="nearest")
        smoothed = convolve1d(smoothed, kernel, axis=1, mode="nearest")
        patches.append(np.clip(smoothed, 0.0, 1.0))
    return patches


def format_stats_text(stats: SpectralStats) -> str:
    """Aligned-column rendering of per-level statistics."""
    lines = [f"{'level':>5}  {'mean':>12}  {'ci95':>12}"]
    for i in range(stats.depth):
        lines.append(
            f"{i + 1:>5}  {stats.per_level_mean[i]:>12.6f}  "
            f"{stats.per_level_ci95[i]:>12.6f}"
        )
    return "\n".join(lines)


def format_bound_text(report: BoundReport) -> str:
    """Aligned-column rendering of a bound report."""
    rows = [
        ("epsilon", f"{report.epsilon:.9g}"),
        ("levels_checked", str(report.levels_checked)),
        ("trials", str(report.trials)),
        ("seed", str(report.seed)),
        ("max_observed_ratio", f"{report.max_observed_ratio:.9g}"),
        ("exhaustive_max_detail", f"{report.exhaustive_max_detail:.9g}"),
        ("exhaustive_max_approx", f"{report.exhaustive_max_approx:.9g}"),
        ("violated", str(report.violated).lower()),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
