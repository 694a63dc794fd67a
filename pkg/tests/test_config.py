"""Strict config schema, layering, and intrinsics sidecars."""

from __future__ import annotations

import json

import pytest

from gsfield.camera import Intrinsics
from gsfield.config import (
    DEFAULTS,
    load_config,
    load_intrinsics,
    merged_config,
    require,
    save_intrinsics,
    validate_config,
)
from gsfield.errors import ConfigError, IoFailure


def test_validate_accepts_known_keys():
    data = {"tracker": {"iters": 4, "tau": 0.1}, "render": {"tile": 8}}
    out = validate_config(data)
    assert out["tracker"]["iters"] == 4
    assert out["tracker"]["tau"] == 0.1
    assert out["render"]["tile"] == 8


def test_validate_rejects_unknown_section():
    with pytest.raises(ConfigError):
        validate_config({"tracker2": {}})


def test_validate_rejects_unknown_key():
    with pytest.raises(ConfigError):
        validate_config({"tracker": {"itters": 4}})


def test_validate_promotes_int_to_float():
    out = validate_config({"tracker": {"tau": 1}})
    assert out["tracker"]["tau"] == 1.0
    assert isinstance(out["tracker"]["tau"], float)


def test_validate_rejects_bool_for_number():
    with pytest.raises(ConfigError):
        validate_config({"tracker": {"iters": True}})


def test_validate_range_checks():
    with pytest.raises(ConfigError):
        validate_config({"tracker": {"radius": 0}})
    with pytest.raises(ConfigError):
        validate_config({"tracker": {"lam": 3.0}})
    with pytest.raises(ConfigError):
        validate_config({"field": {"alpha": 0.0}})
    with pytest.raises(ConfigError):
        validate_config({"render": {"background": [0.0, 0.0]}})
    with pytest.raises(ConfigError):
        validate_config({"trajectory": {"max_angle": 90.0}})


def test_merged_config_layering():
    file_cfg = {"tracker": {"iters": 3, "tau": 0.2}}
    overrides = {"tracker": {"iters": 5, "tau": None}}
    out = merged_config(file_cfg, overrides)
    assert out["tracker"]["iters"] == 5  # override wins
    assert out["tracker"]["tau"] == 0.2  # None override keeps the file value
    assert out["tracker"]["lam"] == DEFAULTS["tracker"]["lam"]
    assert out["render"]["tile"] == DEFAULTS["render"]["tile"]


def test_merged_config_validates_overrides():
    with pytest.raises(ConfigError):
        merged_config(None, {"tracker": {"radius": 99}})


def test_require():
    cfg = merged_config(None, {"paths": {"out": "somewhere"}})
    assert require(cfg, "paths", "out") == "somewhere"
    with pytest.raises(ConfigError):
        require(cfg, "paths", "frames")


def test_load_config_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"render": {"tile": 4}}))
    assert load_config(p)["render"]["tile"] == 4
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(IoFailure):
        load_config(tmp_path / "missing.json")


def test_intrinsics_roundtrip(tmp_path):
    k = Intrinsics(128.0, 130.0, 63.5, 63.5, 128, 128)
    p = tmp_path / "k.json"
    save_intrinsics(k, p)
    back = load_intrinsics(p)
    assert back == k


def test_intrinsics_malformed(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"fx": 1.0}))
    with pytest.raises(ConfigError):
        load_intrinsics(p)
    p.write_text("nope")
    with pytest.raises(ConfigError):
        load_intrinsics(p)
