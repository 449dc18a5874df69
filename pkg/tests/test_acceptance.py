"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines on the terminal.
"""

import time

import numpy as np
import pytest

from asd.analysis import (
    lowpass_noise_patches,
    spectral_stats,
    uniform_noise_patches,
    verify_amplitude_bound,
)
from asd.detection import AsdConfig, BoundingBox, iou, nms
from asd.evaluate import EvalItem, evaluate_corpus, oracle_detector_factory
from asd.masking import MaskConfig, asd_mask, threshold_for_level
from asd.patches import PatchSpec, inject_patch
from asd.wavelet import decompose, dwt_step_2d, reconstruct

THETA = 0.17


def _report(criterion: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {criterion:2d}] {status}: {detail}")
    assert passed, f"criterion {criterion} failed: {detail}"


def test_criterion_1_perfect_reconstruction():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        unit = 2**n
        height = unit * int(rng.integers(1, 64 // unit + 1))
        width = unit * int(rng.integers(1, 64 // unit + 1))
        height = max(height, 8) if unit <= 8 else height
        image = rng.uniform(-1.0, 1.0, size=(height, width))
        recovered = reconstruct(decompose(image, n))
        worst = max(worst, float(np.abs(recovered - image).max()))
    elapsed = time.perf_counter() - start
    _report(
        1,
        worst <= 1e-10 and elapsed < 10.0,
        f"1000 round trips, worst per-pixel error {worst:.3e} (limit 1e-10), "
        f"{elapsed:.2f}s (limit 10s)",
    )


def test_criterion_2_amplitude_bound():
    start = time.perf_counter()
    exhaustive_ok = True
    exhaustive_detail = []
    trial_ok = True
    for eps in (8 / 255, 0.1, 0.5):
        report = verify_amplitude_bound(epsilon=eps, n=3, trials=100_000, size=(32, 32))
        exhaustive_ok &= abs(report.exhaustive_max_detail - 2 * eps) <= 1e-12
        exhaustive_ok &= abs(report.exhaustive_max_approx - 2 * eps) <= 1e-12
        trial_ok &= not report.violated
        exhaustive_detail.append(f"eps={eps:.4g} ratio={report.max_observed_ratio:.4f}")
    elapsed = time.perf_counter() - start
    _report(
        2,
        exhaustive_ok and trial_ok and elapsed < 60.0,
        "exhaustive 2x2 maxima equal 2*eps to 1e-12; 3x100000 trials with no "
        f"violation ({'; '.join(exhaustive_detail)}), {elapsed:.1f}s (limit 60s)",
    )


def test_criterion_3_constant_signal_rule():
    rng = np.random.default_rng(103)
    ok = True
    for value in [0.0, 1.0, 0.5, 1 / 3, *rng.uniform(0, 1, size=8)]:
        approx, details = dwt_step_2d(np.full((16, 16), value))
        ok &= bool((approx == 2 * value).all())
        ok &= bool((details.d_h == 0.0).all())
        ok &= bool((details.d_v == 0.0).all())
        ok &= bool((details.d_d == 0.0).all())
    _report(3, ok, "constant images: details identically 0 and A1 == 2c exactly")


def test_criterion_4_threshold_schedule():
    values = [threshold_for_level(i, THETA) for i in (1, 2, 3)]
    ok = values == [0.17, 0.34, 0.68]
    _report(4, ok, f"theta=0.17 gives per-level thresholds {values} exactly")


def test_criterion_5_range_evasion():
    rng = np.random.default_rng(105)
    total_mask_pixels = 0
    for _ in range(100):
        height = int(rng.integers(16, 65))
        width = int(rng.integers(16, 65))
        center = float(rng.uniform(THETA / 2 + 0.01, 1 - THETA / 2 - 0.01))
        lo = center - THETA / 2
        hi = lo + THETA
        while hi - lo >= THETA:
            hi = np.nextafter(hi, lo)
        image = rng.uniform(lo, hi, size=(height, width, 3))
        _, mask = asd_mask(image, MaskConfig(theta=THETA, n=3))
        total_mask_pixels += int(mask.sum())
    _report(
        5,
        total_mask_pixels == 0,
        "100 random width-0.17-interval images: fused mask pixel count "
        f"{total_mask_pixels} (must be exactly 0)",
    )


def test_criterion_6_checkerboard_detection():
    image = np.full((64, 64, 3), 0.5)
    patched = inject_patch(
        image,
        PatchSpec(
            kind="checkerboard", region=BoundingBox(16, 16, 48, 48), amplitude=1.0
        ),
        seed=0,
    )
    _, mask = asd_mask(patched, MaskConfig(theta=THETA, n=3))
    interior_fraction = float(mask[16:48, 16:48].mean())
    outside = np.ones((64, 64), dtype=bool)
    # One level-1 coefficient (2 px) of smoothing halo around the patch.
    outside[14:50, 14:50] = False
    stray = int(mask[outside].sum())
    _report(
        6,
        interior_fraction >= 0.9 and stray == 0,
        f"checkerboard patch interior {interior_fraction:.1%} masked "
        f"(need >= 90%); {stray} masked pixels beyond the one-coefficient "
        "border (must be 0)",
    )


def _reference_nms(boxes, threshold):
    remaining = sorted(boxes, key=lambda b: (-b.score, b.x1, b.y1, b.x2, b.y2, b.label))
    kept = []
    while remaining:
        best = remaining.pop(0)
        kept.append(best)
        remaining = [
            b for b in remaining if b.label != best.label or iou(b, best) < threshold
        ]
    return kept


def test_criterion_7_nms_oracle_equivalence():
    rng = np.random.default_rng(107)
    mismatches = 0
    non_idempotent = 0
    for _ in range(10_000):
        count = int(rng.integers(0, 7))
        boxes = []
        for _ in range(count):
            x1, y1 = rng.uniform(0, 60, size=2)
            w, h = rng.uniform(1, 40, size=2)
            boxes.append(
                BoundingBox(
                    x1,
                    y1,
                    x1 + w,
                    y1 + h,
                    score=float(rng.integers(0, 11)) / 10.0,
                    label=int(rng.integers(0, 2)),
                )
            )
        threshold = float(rng.uniform(0.1, 0.9))
        got = nms(boxes, threshold)
        mismatches += got != _reference_nms(boxes, threshold)
        non_idempotent += nms(got, threshold) != got
    _report(
        7,
        mismatches == 0 and non_idempotent == 0,
        f"10000 random instances: {mismatches} oracle mismatches, "
        f"{non_idempotent} idempotence failures",
    )


def test_criterion_8_spectral_ordering():
    noisy = spectral_stats(uniform_noise_patches(16, (64, 64), seed=81), n=3)
    smooth = spectral_stats(lowpass_noise_patches(16, (64, 64), seed=82), n=3)
    gaps = [
        noisy.per_level_mean[i] - smooth.per_level_mean[i] for i in range(3)
    ]
    _report(
        8,
        all(gap > 0 for gap in gaps),
        "scaled per-level means, noise minus low-pass: "
        + ", ".join(f"L{i + 1} +{gap:.3f}" for i, gap in enumerate(gaps)),
    )


def _build_corpus(with_patches: bool):
    rng = np.random.default_rng(109)
    items = []
    for i in range(50):
        image = np.full((64, 64, 3), 0.5)
        w = int(rng.integers(16, 33))
        h = int(rng.integers(16, 33))
        x1 = int(rng.integers(2, 64 - w - 2))
        y1 = int(rng.integers(2, 64 - h - 2))
        gt_box = BoundingBox(x1, y1, x1 + w, y1 + h)
        if with_patches:
            spec = PatchSpec(
                kind="checkerboard", region=gt_box, amplitude=1.0, period=2
            )
            image = inject_patch(image, spec, seed=1000 + i)
            items.append(
                EvalItem(
                    name=f"img{i:03d}.png",
                    image=image,
                    gt_boxes=[gt_box],
                    patch_region=gt_box,
                )
            )
        else:
            items.append(
                EvalItem(name=f"img{i:03d}.png", image=image, gt_boxes=[gt_box])
            )
    return items


def test_criterion_9_end_to_end_efficacy():
    attacked = _build_corpus(with_patches=True)
    clean = _build_corpus(with_patches=False)
    factory = oracle_detector_factory()
    undefended_ap, _ = evaluate_corpus(attacked, AsdConfig(levels=(0,)), factory)
    defended_ap, _ = evaluate_corpus(
        attacked, AsdConfig(theta=THETA, levels=(0, 1, 2, 3)), factory
    )
    clean_ap, _ = evaluate_corpus(
        clean, AsdConfig(theta=THETA, levels=(0, 1, 2, 3)), factory
    )
    _report(
        9,
        undefended_ap <= 0.1 and defended_ap >= 0.9 and clean_ap == 1.0,
        f"50-image corpus: AP50 undefended {undefended_ap:.3f} (need <= 0.1), "
        f"defended {defended_ap:.3f} (need >= 0.9), clean defended "
        f"{clean_ap:.3f} (need == 1.0)",
    )


def test_criterion_10_masking_latency():
    # Exercised through the built-in benchmark subcommand.
    import io
    import json
    from contextlib import redirect_stdout

    from asd.cli import main

    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(
            ["benchmark", "--size", "416x416", "--repeats", "10", "--levels", "3"]
        )
    result = json.loads(buffer.getvalue())
    _report(
        10,
        code == 0 and result["median_ms"] < 50.0,
        f"asd_mask 416x416 n=3: median {result['median_ms']:.1f} ms over "
        f"{result['repeats']} runs (limit 50 ms); "
        f"min {result['min_ms']:.1f} ms, max {result['max_ms']:.1f} ms",
    )
