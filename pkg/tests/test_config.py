"""Run-config serialization, presets, and validation."""

import json

import pytest

from adaptseg.config import (
    RunConfig,
    desk_run_config,
    full_run_config,
    load_run_config,
    run_config_from_dict,
    run_config_to_dict,
    save_run_config,
)
from adaptseg.data.synthetic import ConfigError


def test_roundtrip_preserves_everything(tmp_path):
    cfg = desk_run_config()
    path = tmp_path / "cfg.json"
    save_run_config(cfg, path)
    loaded = load_run_config(path)
    assert run_config_to_dict(loaded) == run_config_to_dict(cfg)
    assert loaded.training.patch_size == (24, 24, 24)  # tuples survive JSON lists


def test_presets_validate():
    desk_run_config().validate()
    full_run_config().validate()


def test_unknown_top_level_key():
    with pytest.raises(ConfigError, match="unknown config key 'shoe_size'"):
        run_config_from_dict({"shoe_size": 9})


def test_unknown_nested_key_names_section():
    with pytest.raises(ConfigError, match="optim.warmup"):
        run_config_from_dict({"optim": {"warmup": 5}})


def test_bad_json_is_a_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_run_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_run_config(tmp_path / "nope.json")


def test_bad_layout_rejected():
    cfg = RunConfig(layout="dicom")
    with pytest.raises(ConfigError, match="layout"):
        cfg.validate()


def test_patch_not_divisible_by_reduction():
    cfg = desk_run_config()
    cfg.training.patch_size = (20, 24, 24)  # 20 % 8 != 0
    with pytest.raises(ConfigError, match="divisible"):
        cfg.validate()


def test_bottleneck_too_small_for_classifier():
    cfg = desk_run_config()
    cfg.classifier.n_blocks = 3  # needs an 8-cube bottleneck, desk has 3
    with pytest.raises(ConfigError, match="n_blocks"):
        cfg.validate()


def test_shipped_config_files_match_presets():
    for name, factory in (("desk", desk_run_config), ("full", full_run_config)):
        on_disk = load_run_config(f"configs/{name}.json")
        assert run_config_to_dict(on_disk) == run_config_to_dict(factory())


def test_data_root_resolution(monkeypatch, tmp_path):
    cfg = desk_run_config()
    monkeypatch.delenv("ADAPTSEG_DATA_ROOT", raising=False)
    assert str(cfg.resolved_data_root()) == "data/synth"
    monkeypatch.setenv("ADAPTSEG_DATA_ROOT", str(tmp_path / "envroot"))
    assert cfg.resolved_data_root() == tmp_path / "envroot"
    assert cfg.resolved_data_root(str(tmp_path / "flag")) == tmp_path / "flag"


def test_config_file_is_plain_json(tmp_path):
    save_run_config(desk_run_config(), tmp_path / "d.json")
    doc = json.loads((tmp_path / "d.json").read_text())
    assert set(doc) == {
        "data_root", "layout", "synthetic", "backbone", "classifier",
        "optim", "alpha", "loss", "training",
    }
