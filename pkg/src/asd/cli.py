"""Command-line client for the defense service.

Every subcommand builds an API request, sends it to the service, and writes
the response to disk or stdout. With ``--server URL`` the request goes to a
running instance over HTTP; otherwise the app is mounted in-process, so the
CLI works standalone with identical semantics (subprocess detectors then run
on the local machine).

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from base64 import b64decode
from pathlib import Path

import httpx

from . import __version__
from .config import resolve
from .errors import InvalidInputError


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; the CLI contract wants 1.
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


class ServiceClient:
    """Minimal JSON-over-HTTP client, remote or in-process."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=300.0)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from starlette.testclient import TestClient

            from .service import app

            self._client = TestClient(
                app, raise_server_exceptions=False, base_url="http://asd.local"
            )

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        return self._handle(response)

    def get(self, path: str) -> dict:
        response = self._client.get(path)
        return self._handle(response)

    @staticmethod
    def _handle(response) -> dict:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise RuntimeError(f"service error {response.status_code}: {detail}")
        return response.json()

    def close(self):
        self._client.close()


def _b64_file(path: Path) -> str:
    import base64

    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return base64.b64encode(path.read_bytes()).decode("ascii")


def _write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _out_dir(args) -> Path:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, payload: dict, text: str | None = None) -> None:
    if getattr(args, "format", "json") == "text" and text is not None:
        print(text)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _pipeline_settings(cfg: dict) -> dict:
    return {
        "theta": cfg["theta"],
        "levels": cfg["levels"],
        "nms_iou": cfg["nms_iou"],
        "blur_sigma": cfg["blur_sigma"],
        "blur_radius": int(cfg["blur_radius"]),
    }


def _resolved(args) -> dict:
    return resolve(
        config_path=getattr(args, "config", None),
        theta=getattr(args, "theta", None),
        levels=getattr(args, "levels", None),
        nms_iou=getattr(args, "nms_iou", None),
        blur_sigma=getattr(args, "blur_sigma", None),
        blur_radius=getattr(args, "blur_radius", None),
        seed=getattr(args, "seed", None),
    )


def cmd_mask(args, client: ServiceClient) -> int:
    cfg = _resolved(args)
    out = _out_dir(args)
    for image_path in args.images:
        path = Path(image_path)
        payload = {
            "image_png_b64": _b64_file(path),
            "settings": {
                "theta": cfg["theta"],
                "max_level": max(cfg["levels"]),
                "blur_sigma": cfg["blur_sigma"],
                "blur_radius": int(cfg["blur_radius"]),
            },
        }
        result = client.post("/mask", payload)
        stem = path.stem
        _write_bytes(out / f"{stem}.defended.png", b64decode(result["defended_png_b64"]))
        _write_bytes(out / f"{stem}.mask.png", b64decode(result["mask_png_b64"]))
        print(
            json.dumps(
                {
                    "schema_version": result["schema_version"],
                    "image": str(path),
                    "defended": str(out / f"{stem}.defended.png"),
                    "mask": str(out / f"{stem}.mask.png"),
                    "mask_pixel_count": result["mask_pixel_count"],
                    "mask_fraction": result["mask_fraction"],
                },
                sort_keys=True,
            )
        )
    return 0


def cmd_detect(args, client: ServiceClient) -> int:
    cfg = _resolved(args)
    detector_cmd = args.detector_cmd or cfg.get("detector_cmd")
    if not detector_cmd:
        raise UsageError("detect requires --detector-cmd")
    path = Path(args.image)
    payload = {
        "image_png_b64": _b64_file(path),
        "detector_command": detector_cmd,
        "settings": _pipeline_settings(cfg),
    }
    result = client.post("/detect", payload)
    if args.out_dir:
        out = _out_dir(args)
        target = out / f"{path.stem}.detections.json"
        target.write_text(
            json.dumps({path.name: result["boxes"]}, indent=2, sort_keys=True) + "\n"
        )
    _emit(args, result)
    return 0


def cmd_analyze(args, client: ServiceClient) -> int:
    from .analysis import SpectralStats, format_stats_text

    directory = Path(args.directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such directory: {directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not files:
        raise InvalidInputError(f"no image files found in {directory}")
    payload = {
        "patches_png_b64": [_b64_file(p) for p in files],
        "levels": args.analysis_levels,
    }
    result = client.post("/analyze", payload)
    stats = SpectralStats(
        per_level_mean=result["per_level_mean"],
        per_level_ci95=result["per_level_ci95"],
    )
    _emit(args, result, format_stats_text(stats))
    return 0


def cmd_verify_bound(args, client: ServiceClient) -> int:
    from .analysis import BoundReport, format_bound_text

    try:
        height, width = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad --size {args.size!r}, expected HxW like 32x32")
    payload = {
        "epsilon": args.epsilon,
        "levels": args.bound_levels,
        "trials": args.trials,
        "height": height,
        "width": width,
    }
    if args.seed is not None:
        payload["seed"] = args.seed
    result = client.post("/verify-bound", payload)
    report = BoundReport(
        **{key: value for key, value in result.items() if key != "schema_version"}
    )
    _emit(args, result, format_bound_text(report))
    return 0


def cmd_inject(args, client: ServiceClient) -> int:
    path = Path(args.image)
    try:
        x1, y1, x2, y2 = (float(v) for v in args.region.split(","))
    except ValueError:
        raise UsageError(f"bad --region {args.region!r}, expected x1,y1,x2,y2")
    payload = {
        "image_png_b64": _b64_file(path),
        "patch": {
            "kind": args.kind,
            "x1": x1,
            "y1": y1,
            "x2": x2,
            "y2": y2,
            "amplitude": args.amplitude,
            "period": args.period,
            "value_center": args.value_center,
        },
        "seed": args.seed if args.seed is not None else 0,
    }
    result = client.post("/inject", payload)
    out = _out_dir(args)
    target = out / f"{path.stem}.patched.png"
    _write_bytes(target, b64decode(result["image_png_b64"]))
    print(
        json.dumps(
            {
                "schema_version": result["schema_version"],
                "image": str(path),
                "patched": str(target),
                "region": [x1, y1, x2, y2],
                "kind": args.kind,
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_eval(args, client: ServiceClient) -> int:
    cfg = _resolved(args)
    gt_path = args.gt or cfg.get("gt")
    if not gt_path:
        raise UsageError("eval requires --gt")
    gt_file = Path(gt_path)
    if not gt_file.is_file():
        raise FileNotFoundError(f"no such ground-truth file: {gt_file}")
    gt = json.loads(gt_file.read_text())

    regions = {}
    regions_path = args.patch_regions or cfg.get("patch_regions")
    if regions_path:
        regions_file = Path(regions_path)
        if not regions_file.is_file():
            raise FileNotFoundError(f"no such regions file: {regions_file}")
        regions = json.loads(regions_file.read_text())

    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"no such corpus directory: {corpus_dir}")
    images = []
    for path in sorted(corpus_dir.iterdir()):
        if path.suffix.lower() not in (".png", ".jpg", ".jpeg"):
            continue
        entry = {
            "name": path.name,
            "image_png_b64": _b64_file(path),
            "gt_boxes": gt.get(path.name, []),
        }
        if path.name in regions:
            r = regions[path.name]
            entry["patch_region"] = {"x1": r[0], "y1": r[1], "x2": r[2], "y2": r[3]}
        images.append(entry)
    if not images:
        raise InvalidInputError(f"no image files found in {corpus_dir}")

    detector_cmd = args.detector_cmd or cfg.get("detector_cmd")
    detector = (
        {"kind": "command", "command": detector_cmd}
        if detector_cmd
        else {"kind": "oracle"}
    )
    payload = {
        "images": images,
        "settings": _pipeline_settings(cfg),
        "detector": detector,
    }
    result = client.post("/eval", payload)
    if args.out_dir:
        out = _out_dir(args)
        (out / "eval.json").write_text(
            json.dumps(result, indent=2, sort_keys=True) + "\n"
        )
    print(
        json.dumps(
            {
                "schema_version": result["schema_version"],
                "ap50": result["ap50"],
                "image_count": result["image_count"],
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_benchmark(args, client: ServiceClient) -> int:
    cfg = _resolved(args)
    try:
        height, width = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise UsageError(f"bad --size {args.size!r}, expected HxW like 416x416")
    payload = {
        "height": height,
        "width": width,
        "settings": {
            "theta": cfg["theta"],
            "max_level": max(cfg["levels"]),
            "blur_sigma": cfg["blur_sigma"],
            "blur_radius": int(cfg["blur_radius"]),
        },
        "repeats": args.repeats,
        "seed": cfg["seed"],
    }
    result = client.post("/benchmark", payload)
    _emit(args, result)
    return 0


def cmd_serve(args, client: ServiceClient) -> int:
    import uvicorn

    uvicorn.run("asd.service:app", host=args.host, port=args.port, workers=1)
    return 0


def _add_common(parser: argparse.ArgumentParser, nms: bool = True):
    parser.add_argument("--theta", type=float, default=None, help="detection threshold")
    parser.add_argument(
        "--levels", type=str, default=None, help="comma-separated decomposition levels"
    )
    if nms:
        parser.add_argument("--nms-iou", type=float, default=None, help="NMS IoU threshold")
    parser.add_argument("--blur-sigma", type=float, default=None, help="blur sigma, px")
    parser.add_argument("--blur-radius", type=int, default=None, help="blur radius, px")
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--out-dir", type=str, default=None, help="output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="asd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"asd {__version__}")
    parser.add_argument(
        "--server",
        type=str,
        default=None,
        help="base URL of a running service; defaults to in-process execution",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("mask", help="defend images: write defended image and mask")
    p.add_argument("images", nargs="+", help="input image files")
    _add_common(p, nms=False)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("detect", help="run the full defended-detection pipeline")
    p.add_argument("image", help="input image file")
    p.add_argument("--detector-cmd", type=str, default=None, help="detector command")
    p.add_argument("--format", choices=("json", "text"), default="json")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("analyze", help="per-level amplitude statistics of patches")
    p.add_argument("directory", help="directory of patch images")
    p.add_argument(
        "--levels", dest="analysis_levels", type=int, default=3,
        help="decomposition depth",
    )
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-bound", help="check the amplitude bound")
    p.add_argument("--epsilon", type=float, required=True, help="perturbation bound")
    p.add_argument(
        "--levels", dest="bound_levels", type=int, default=3, help="decomposition depth"
    )
    p.add_argument("--trials", type=int, default=10000, help="randomized trials")
    p.add_argument("--size", type=str, default="32x32", help="trial image size HxW")
    p.add_argument("--seed", type=int, default=None, help="random seed")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_verify_bound)

    p = sub.add_parser("inject", help="apply a synthetic patch to an image")
    p.add_argument("image", help="input image file")
    p.add_argument(
        "--kind",
        choices=("checkerboard", "uniform-noise", "tiled-texture", "range-limited-noise"),
        default="checkerboard",
    )
    p.add_argument("--region", type=str, required=True, help="x1,y1,x2,y2")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--period", type=int, default=2)
    p.add_argument("--value-center", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=str, default=None)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("eval", help="evaluate detection over a corpus, report AP50")
    p.add_argument("corpus", help="directory of corpus images")
    p.add_argument("--gt", type=str, default=None, help="ground-truth JSON file")
    p.add_argument(
        "--patch-regions",
        type=str,
        default=None,
        help="JSON file mapping filename to patch region [x1,y1,x2,y2]",
    )
    p.add_argument("--detector-cmd", type=str, default=None, help="detector command")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="time the masking pipeline")
    p.add_argument("--size", type=str, default="416x416", help="image size HxW")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--format", choices=("json", "text"), default="json")
    _add_common(p, nms=False)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", type=str, default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if getattr(args, "command", None) is None:
        print(parser.format_usage(), file=sys.stderr)
        return 1

    client = None
    try:
        if args.func is not cmd_serve:
            client = ServiceClient(args.server)
        return args.func(args, client)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (
        FileNotFoundError,
        InvalidInputError,
        RuntimeError,
        OSError,
        httpx.HTTPError,
        json.JSONDecodeError,
    ) as exc:
        print(f"asd: {exc}", file=sys.stderr)
        return 2
    finally:
        if client is not None:
            client.close()


if __name__ == "__main__":
    sys.exit(main())
