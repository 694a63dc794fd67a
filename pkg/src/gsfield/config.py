"""Pipeline configuration: one JSON file plus command-line overrides.

The config is a nested dict with fixed sections; unknown sections or keys
are hard errors so typos cannot silently fall back to defaults.  Values
given on the command line override values from the file.
"""

from __future__ import annotations

import json
from pathlib import Path

from .camera import Intrinsics
from .errors import ConfigError, IoFailure

# section -> key -> (type, validator or None)
_POSITIVE = ("must be positive", lambda v: v > 0)
_UNIT = ("must lie in (0, 1]", lambda v: 0.0 < v <= 1.0)

SCHEMA = {
    "paths": {
        "frames": (str, None),
        "depths": (str, None),
        "sparse": (str, None),
        "tracks": (str, None),
        "field": (str, None),
        "trajectory": (str, None),
        "intrinsics": (str, None),
        "out": (str, None),
    },
    "tracker": {
        "iters": (int, ("must be >= 1", lambda v: v >= 1)),
        "radius": (int, ("must lie in 1..15", lambda v: 1 <= v <= 15)),
        "tau": (float, _POSITIVE),
        "lam": (float, ("must lie in (0, 2]", lambda v: 0.0 < v <= 2.0)),
        "coupling": (str, ("must be 'loose' or 'tight'", lambda v: v in ("loose", "tight"))),
    },
    "field": {
        "s": (float, _POSITIVE),
        "alpha": (float, _UNIT),
        "color_mode": (
            str,
            ("must be 'static' or 'per_frame'", lambda v: v in ("static", "per_frame")),
        ),
    },
    "render": {
        "tile": (int, _POSITIVE),
        "background": (list, ("must be 3 numbers in [0, 1]",
                              lambda v: len(v) == 3 and all(0.0 <= float(c) <= 1.0 for c in v))),
        "reference": (bool, None),
        "transmittance": (bool, None),
    },
    "trajectory": {
        "kind": (str, ("must be arcball, dolly_zoom, keyframe, or identity",
                       lambda v: v in ("arcball", "dolly_zoom", "keyframe", "identity"))),
        "direction": (str, None),
        "max_angle": (float, ("must lie in (0, 90)", lambda v: 0.0 < v < 90.0)),
        "pivot": (list, ("must be 3 numbers", lambda v: len(v) == 3)),
        "t": (int, ("must be >= 1", lambda v: v >= 1)),
        "z_target": (float, _POSITIVE),
        "zoom": (float, _POSITIVE),
        "keys": (str, None),
    },
}

DEFAULTS = {
    "tracker": {"iters": 8, "radius": 4, "tau": 0.05, "lam": 0.5, "coupling": "loose"},
    "render": {"tile": 16, "background": [0.0, 0.0, 0.0], "reference": False,
               "transmittance": False},
}


def _check_value(section: str, key: str, value):
    want, check = SCHEMA[section][key]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if want in (int, float) and isinstance(value, bool):
        raise ConfigError(f"{section}.{key}: expected {want.__name__}, got bool")
    if not isinstance(value, want):
        raise ConfigError(
            f"{section}.{key}: expected {want.__name__}, got {type(value).__name__}"
        )
    if check is not None:
        why, ok = check
        if not ok(value):
            raise ConfigError(f"{section}.{key} {why}, got {value!r}")
    return value


def validate_config(data: dict) -> dict:
    """Strict validation: every section and key must exist in the schema."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    out = {}
    for section, entries in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(entries, dict):
            raise ConfigError(f"section {section!r} must be an object")
        out[section] = {}
        for key, value in entries.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            out[section][key] = _check_value(section, key, value)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    return validate_config(data)


def merged_config(file_config: dict | None, overrides: dict) -> dict:
    """defaults <- file <- non-None overrides, each validated strictly."""
    out = {s: dict(v) for s, v in DEFAULTS.items()}
    for layer in (file_config or {}, overrides):
        for section, entries in layer.items():
            dst = out.setdefault(section, {})
            for key, value in entries.items():
                if value is None:
                    continue
                if section not in SCHEMA or key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                dst[key] = _check_value(section, key, value)
    return out


def require(config: dict, section: str, key: str):
    try:
        return config[section][key]
    except KeyError:
        raise ConfigError(f"missing required setting {section}.{key}") from None


def save_intrinsics(k: Intrinsics, path) -> None:
    data = {"fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy,
            "width": k.width, "height": k.height}
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def load_intrinsics(path) -> Intrinsics:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise IoFailure(f"cannot read intrinsics {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"intrinsics {path} is not valid JSON: {e}") from None
    try:
        return Intrinsics(
            float(data["fx"]), float(data["fy"]), float(data["cx"]), float(data["cy"]),
            int(data["width"]), int(data["height"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"intrinsics {path} is malformed: {e}") from None
