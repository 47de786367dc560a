"""Tests for netveil.config: config persistence and setting getters."""

import json
from pathlib import Path

from netveil.config import (
    BUNDLED_REFERENCE_DIR,
    DEFAULT_CONFIG,
    DEFAULT_INTERAS_CAP,
    DEFAULT_SOLVER_TIMEOUT_MS,
    NetveilConfig,
    get_interas_cap,
    get_reference_dir,
    get_solver_timeout_ms,
    load_config,
    save_config,
)


class TestLoadConfig:
    def test_no_file_returns_defaults(self, tmp_config):
        config = load_config()
        assert config["reference_dir"] is None
        assert config["solver_timeout_ms"] is None
        assert config["interas_cap"] is None

    def test_every_declared_key_has_a_default(self):
        assert set(NetveilConfig.__annotations__) == set(DEFAULT_CONFIG)

    def test_valid_file_merged(self, tmp_config):
        tmp_config.parent.mkdir(parents=True, exist_ok=True)
        tmp_config.write_text(json.dumps({"reference_dir": "/srv/graphs", "custom_key": "val"}))
        config = load_config()
        assert config["reference_dir"] == "/srv/graphs"
        assert config["custom_key"] == "val"
        assert "solver_timeout_ms" in config

    def test_corrupt_json_returns_defaults(self, tmp_config, capsys):
        tmp_config.parent.mkdir(parents=True, exist_ok=True)
        tmp_config.write_text("not valid json {{{")
        config = load_config()
        assert config["reference_dir"] is None
        assert "Warning" in capsys.readouterr().err


class TestSaveConfig:
    def test_creates_dir_and_writes(self, tmp_config):
        save_config({"reference_dir": "/srv/graphs"})
        assert tmp_config.exists()
        assert json.loads(tmp_config.read_text())["reference_dir"] == "/srv/graphs"

    def test_overwrites_existing(self, tmp_config):
        save_config({"interas_cap": 10})
        save_config({"interas_cap": 20})
        assert json.loads(tmp_config.read_text())["interas_cap"] == 20

    def test_oserror_prints_warning(self, tmp_config, monkeypatch, capsys):
        def failing_mkdir(self, *a, **kw):
            raise OSError("Permission denied")

        monkeypatch.setattr(type(tmp_config.parent), "mkdir", failing_mkdir)
        save_config({"interas_cap": 3})
        assert "Warning" in capsys.readouterr().err


class TestGetReferenceDir:
    def test_env_var_takes_priority(self, tmp_config, monkeypatch, tmp_path):
        save_config({"reference_dir": "/from/config"})
        monkeypatch.setenv("NETVEIL_REFERENCE_DIR", str(tmp_path))
        assert get_reference_dir() == tmp_path

    def test_config_over_default(self, tmp_config):
        save_config({"reference_dir": "/from/config"})
        assert get_reference_dir() == Path("/from/config")

    def test_bundled_corpus_by_default(self, tmp_config):
        assert get_reference_dir() == BUNDLED_REFERENCE_DIR
        assert len(list(BUNDLED_REFERENCE_DIR.glob("*.graphml"))) >= 10


class TestIntegerSettings:
    def test_defaults(self, tmp_config):
        assert get_solver_timeout_ms() == DEFAULT_SOLVER_TIMEOUT_MS == 60000
        assert get_interas_cap() == DEFAULT_INTERAS_CAP == 50

    def test_config_value(self, tmp_config):
        save_config({"solver_timeout_ms": 1500, "interas_cap": 7})
        assert get_solver_timeout_ms() == 1500
        assert get_interas_cap() == 7

    def test_env_over_config(self, tmp_config, monkeypatch):
        save_config({"interas_cap": 7})
        monkeypatch.setenv("NETVEIL_INTERAS_CAP", "9")
        assert get_interas_cap() == 9

    def test_bad_env_value_falls_back(self, tmp_config, monkeypatch, capsys):
        monkeypatch.setenv("NETVEIL_SOLVER_TIMEOUT_MS", "soon")
        assert get_solver_timeout_ms() == DEFAULT_SOLVER_TIMEOUT_MS
        assert "Warning" in capsys.readouterr().err
