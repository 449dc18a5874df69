import json

import numpy as np
import pytest

from asd.cli import main
from asd.evaluate import save_boxes
from asd.detection import BoundingBox
from asd.imgio import load_image, load_mask, save_image
from asd.patches import PatchSpec, inject_patch


@pytest.fixture
def gray_png(tmp_path):
    path = tmp_path / "gray.png"
    save_image(np.full((32, 32, 3), 0.5), path)
    return path


@pytest.fixture
def attacked_png(tmp_path):
    image = np.full((64, 64, 3), 0.5)
    attacked = inject_patch(
        image,
        PatchSpec(kind="checkerboard", region=BoundingBox(16, 16, 48, 48), amplitude=1.0),
        seed=0,
    )
    path = tmp_path / "attacked.png"
    save_image(attacked, path)
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "--definitely-not-a-flag")
        assert code == 1
        assert "usage" in err.lower()

    def test_no_command_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys)
        assert code == 1

    def test_unknown_subcommand_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 1

    def test_missing_input_file_is_runtime_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "mask", str(tmp_path / "missing.png"))
        assert code == 2
        assert "missing.png" in err

    def test_bad_region_is_usage_error(self, capsys, gray_png):
        code, _, _ = run_cli(capsys, "inject", str(gray_png), "--region", "oops")
        assert code == 1


class TestMaskCommand:
    def test_writes_defended_and_mask(self, capsys, gray_png, tmp_path):
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            capsys, "mask", "--theta", "0.17", "--levels", "3",
            str(gray_png), "--out-dir", str(out),
        )
        assert code == 0
        assert (out / "gray.defended.png").is_file()
        assert (out / "gray.mask.png").is_file()
        record = json.loads(stdout.splitlines()[-1])
        assert record["mask_pixel_count"] == 0
        np.testing.assert_array_equal(
            load_image(out / "gray.defended.png"), load_image(gray_png)
        )

    def test_masks_attacked_image(self, capsys, attacked_png, tmp_path):
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            capsys, "mask", str(attacked_png), "--out-dir", str(out)
        )
        assert code == 0
        mask = load_mask(out / "attacked.mask.png")
        assert mask[16:48, 16:48].all()

    def test_deterministic_output_bytes(self, capsys, attacked_png, tmp_path):
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        run_cli(capsys, "mask", str(attacked_png), "--out-dir", str(out1))
        run_cli(capsys, "mask", str(attacked_png), "--out-dir", str(out2))
        first = (out1 / "attacked.defended.png").read_bytes()
        second = (out2 / "attacked.defended.png").read_bytes()
        assert first == second

    def test_config_file_with_flag_override(self, capsys, attacked_png, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"theta": 5.0, "levels": [0, 1, 2, 3]}))
        out = tmp_path / "out"
        # theta 5.0 from file would mask nothing; the flag brings it back down.
        code, stdout, _ = run_cli(
            capsys, "mask", str(attacked_png), "--config", str(config),
            "--theta", "0.17", "--out-dir", str(out),
        )
        assert code == 0
        assert json.loads(stdout.splitlines()[-1])["mask_pixel_count"] > 0

    def test_unknown_config_key_fails(self, capsys, gray_png, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"thtea": 0.17}))
        code, _, err = run_cli(
            capsys, "mask", str(gray_png), "--config", str(config)
        )
        assert code == 2
        assert "thtea" in err


class TestInjectCommand:
    def test_inject_then_mask_detects(self, capsys, gray_png, tmp_path):
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            capsys, "inject", str(gray_png),
            "--kind", "checkerboard", "--region", "8,8,24,24",
            "--amplitude", "1.0", "--out-dir", str(out),
        )
        assert code == 0
        patched = out / "gray.patched.png"
        assert patched.is_file()
        code, stdout, _ = run_cli(capsys, "mask", str(patched), "--out-dir", str(out))
        assert code == 0
        assert json.loads(stdout.splitlines()[-1])["mask_pixel_count"] > 0

    def test_range_limited_patch_evades(self, capsys, gray_png, tmp_path):
        out = tmp_path / "out"
        code, _, _ = run_cli(
            capsys, "inject", str(gray_png),
            "--kind", "range-limited-noise", "--region", "8,8,24,24",
            "--amplitude", "0.17", "--seed", "7", "--out-dir", str(out),
        )
        assert code == 0
        code, stdout, _ = run_cli(
            capsys, "mask", str(out / "gray.patched.png"), "--out-dir", str(out)
        )
        assert code == 0
        assert json.loads(stdout.splitlines()[-1])["mask_pixel_count"] == 0

    def test_seeded_injection_is_deterministic(self, capsys, gray_png, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            run_cli(
                capsys, "inject", str(gray_png),
                "--kind", "uniform-noise", "--region", "0,0,16,16",
                "--amplitude", "1.0", "--seed", "42", "--out-dir", str(out),
            )
        assert (out1 / "gray.patched.png").read_bytes() == (
            out2 / "gray.patched.png"
        ).read_bytes()


class TestVerifyBoundCommand:
    def test_json_report(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "verify-bound", "--epsilon", "0.0313", "--levels", "3",
            "--trials", "200",
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["violated"] is False
        assert payload["schema_version"] == 1
        assert payload["levels_checked"] == 3

    def test_text_report(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "verify-bound", "--epsilon", "0.1", "--trials", "50",
            "--format", "text",
        )
        assert code == 0
        assert "violated" in stdout
        assert "{" not in stdout

    def test_bad_size_is_usage_error(self, capsys):
        code, _, _ = run_cli(
            capsys, "verify-bound", "--epsilon", "0.1", "--size", "banana"
        )
        assert code == 1


class TestAnalyzeCommand:
    def test_stats_over_directory(self, capsys, tmp_path, rng):
        patch_dir = tmp_path / "patches"
        patch_dir.mkdir()
        for i in range(3):
            save_image(rng.uniform(0, 1, size=(16, 16, 3)), patch_dir / f"p{i}.png")
        code, stdout, _ = run_cli(
            capsys, "analyze", str(patch_dir), "--levels", "2"
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["patch_count"] == 3
        assert len(payload["per_level_mean"]) == 2
        assert payload["per_level_mean"][0] > 0

    def test_text_format(self, capsys, tmp_path, rng):
        patch_dir = tmp_path / "patches"
        patch_dir.mkdir()
        save_image(rng.uniform(0, 1, size=(16, 16, 3)), patch_dir / "p.png")
        code, stdout, _ = run_cli(
            capsys, "analyze", str(patch_dir), "--levels", "2", "--format", "text"
        )
        assert code == 0
        assert stdout.splitlines()[0].split() == ["level", "mean", "ci95"]
        assert len(stdout.splitlines()) == 3

    def test_empty_directory_is_runtime_error(self, capsys, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        code, _, _ = run_cli(capsys, "analyze", str(empty))
        assert code == 2


class TestDetectCommand:
    def test_detect_with_subprocess(self, capsys, gray_png, tmp_path):
        script = tmp_path / "det.py"
        script.write_text(
            "import json\n"
            'print(json.dumps({"boxes": ['
            '{"x1": 2, "y1": 2, "x2": 12, "y2": 12, "score": 0.6}]}))\n'
        )
        code, stdout, _ = run_cli(
            capsys, "detect", str(gray_png),
            "--detector-cmd", f"python3 {script}", "--levels", "0,1",
            "--out-dir", str(tmp_path / "out"),
        )
        assert code == 0
        payload = json.loads(stdout)
        assert len(payload["boxes"]) == 1
        written = json.loads((tmp_path / "out" / "gray.detections.json").read_text())
        assert written["gray.png"] == payload["boxes"]

    def test_detect_requires_command(self, capsys, gray_png):
        code, _, _ = run_cli(capsys, "detect", str(gray_png))
        assert code == 1

    def test_failing_detector_is_runtime_error(self, capsys, gray_png):
        code, _, err = run_cli(
            capsys, "detect", str(gray_png), "--detector-cmd", "false"
        )
        assert code == 2
        assert "502" in err


class TestEvalCommand:
    def _build_corpus(self, tmp_path, count=4):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        gt = {}
        regions = {}
        for i in range(count):
            name = f"img{i}.png"
            image = np.full((64, 64, 3), 0.5)
            attacked = inject_patch(
                image,
                PatchSpec(
                    kind="checkerboard",
                    region=BoundingBox(16, 16, 44, 44),
                    amplitude=1.0,
                ),
                seed=i,
            )
            save_image(attacked, corpus / name)
            gt[name] = [BoundingBox(16, 16, 44, 44)]
            regions[name] = [16, 16, 44, 44]
        gt_path = tmp_path / "gt.json"
        save_boxes(gt, gt_path)
        regions_path = tmp_path / "regions.json"
        regions_path.write_text(json.dumps(regions))
        return corpus, gt_path, regions_path

    def test_defended_eval_restores_ap(self, capsys, tmp_path):
        corpus, gt_path, regions_path = self._build_corpus(tmp_path)
        out = tmp_path / "out"
        code, stdout, _ = run_cli(
            capsys, "eval", str(corpus), "--gt", str(gt_path),
            "--patch-regions", str(regions_path), "--out-dir", str(out),
        )
        assert code == 0
        assert json.loads(stdout)["ap50"] == 1.0
        report = json.loads((out / "eval.json").read_text())
        assert report["image_count"] == 4

    def test_undefended_eval_fails(self, capsys, tmp_path):
        corpus, gt_path, regions_path = self._build_corpus(tmp_path)
        code, stdout, _ = run_cli(
            capsys, "eval", str(corpus), "--gt", str(gt_path),
            "--patch-regions", str(regions_path), "--levels", "0",
        )
        assert code == 0
        assert json.loads(stdout)["ap50"] == 0.0

    def test_eval_requires_gt(self, capsys, tmp_path):
        corpus, _, _ = self._build_corpus(tmp_path, count=1)
        code, _, _ = run_cli(capsys, "eval", str(corpus))
        assert code == 1


class TestBenchmarkCommand:
    def test_small_benchmark_reports_timings(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "benchmark", "--size", "64x64", "--repeats", "2"
        )
        assert code == 0
        payload = json.loads(stdout)
        assert payload["repeats"] == 2
        assert payload["mean_ms"] > 0


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
