"""Run configuration: defaults, JSON config files, and flag overrides.

Default hyperparameters: threshold 0.17, aggregated levels 0-3, NMS IoU 0.4,
blur sigma 10 px with radius 20 px.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import InvalidInputError

DEFAULTS: dict = {
    "theta": 0.17,
    "levels": [0, 1, 2, 3],
    "nms_iou": 0.4,
    "blur_sigma": 10.0,
    "blur_radius": 20,
    "seed": 0,
}

_KNOWN_KEYS = set(DEFAULTS) | {"detector_cmd", "gt", "out_dir", "patch_regions"}


def load_config_file(path) -> dict:
    """Read a JSON config file, rejecting unknown keys."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such config file: {p}")
    with open(p, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidInputError("config file must contain a JSON object")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    return data


def parse_levels(text) -> list[int]:
    """Parse a comma-separated level list like ``0,1,2,3``."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError as exc:
        raise InvalidInputError(f"bad levels value {text!r}: {exc}") from exc


def resolve(config_path=None, **overrides) -> dict:
    """Merge defaults, an optional config file, and explicit flag overrides
    (``None`` values are ignored)."""
    merged = dict(DEFAULTS)
    if config_path is not None:
        merged.update(load_config_file(config_path))
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    merged["levels"] = parse_levels(merged["levels"])
    return merged
