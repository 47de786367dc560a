"""Tests for netveil.cli: argument handling, subcommands and exit codes."""

import argparse
import json
import sys
from pathlib import Path

import pytest

from netveil import cli
from netveil.anonymization import KdmaLevel
from netveil.cli import build_run_config, main
from netveil.errors import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_VERIFICATION_FAILED
from netveil.pipeline import (
    Anonymizer,
    EquivalenceReport,
    ExpansionMode,
    MissingPath,
    RepairMode,
    RunReport,
)
from netveil.repair import IbgpStrategy


def run_main(monkeypatch, *argv):
    monkeypatch.setattr(sys, "argv", ["netveil", *argv])
    main()


def anonymize_args(**overrides):
    values = dict(
        input=Path("in"),
        output=Path("out"),
        mode="embedding",
        add_routers=None,
        mul=1,
        k_routers=2,
        k_hosts=2,
        kdma="strong",
        anonymizer="greedy",
        sampling="RW",
        repair="constraint",
        ibgp_strategy=IbgpStrategy.FILTER_NEXTHOP.value,
        reference_dir=None,
        seed=0,
        report=None,
        no_filter_mimicry=False,
        timings=False,
        solver_timeout_ms=None,
    )
    values.update(overrides)
    return argparse.Namespace(**values)


class TestBuildRunConfig:
    def test_defaults(self):
        cfg = build_run_config(anonymize_args())
        assert cfg.mode == ExpansionMode.EMBEDDING
        assert cfg.params.k_R == 2
        assert cfg.params.kdma_level == KdmaLevel.STRONG
        assert cfg.filter_mimicry
        assert cfg.sampling.seed == 0

    def test_overrides(self):
        cfg = build_run_config(anonymize_args(
            mode="replica", k_routers=3, kdma="weak", anonymizer="maxsmt",
            repair="iterative", seed=9, no_filter_mimicry=True,
        ))
        assert cfg.mode == ExpansionMode.REPLICA
        assert cfg.params.k_R == 3
        assert cfg.params.kdma_level == KdmaLevel.WEAK
        assert cfg.anonymizer == Anonymizer.MAXSMT
        assert cfg.repair_mode == RepairMode.ITERATIVE
        assert cfg.sampling.seed == 9
        assert not cfg.filter_mimicry


class TestMain:
    def test_no_command_prints_help(self, monkeypatch, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch)
        assert excinfo.value.code == EXIT_ERROR
        assert "anonymize" in capsys.readouterr().out

    def test_version(self, monkeypatch, capsys):
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch, "--version")
        assert excinfo.value.code == 0
        assert "netveil" in capsys.readouterr().out


class TestSimulate:
    def test_prints_fib_dump(self, monkeypatch, capsys, networks_dir):
        run_main(monkeypatch, "simulate", "--input", str(networks_dir / "campus"))
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema"] == 1
        assert sorted(payload["routers"]) == ["r1", "r2", "r3", "r4", "r5"]

    def test_writes_fib_dump(self, monkeypatch, capsys, networks_dir, tmp_path):
        target = tmp_path / "fibs" / "campus.json"
        run_main(monkeypatch, "simulate", "-i", str(networks_dir / "campus"), "--fib-dump", str(target))
        assert json.loads(target.read_text())["schema"] == 1
        assert capsys.readouterr().out == ""

    def test_dataplane(self, monkeypatch, capsys, networks_dir):
        run_main(monkeypatch, "simulate", "-i", str(networks_dir / "campus"), "--dataplane")
        payload = json.loads(capsys.readouterr().out)
        assert payload["paths"]["h5->h1"] == [["h5", "r5", "r4", "r1", "h1"]]
        assert payload["errors"] == {}

    def test_missing_input(self, monkeypatch, capsys, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch, "simulate", "-i", str(tmp_path / "absent"))
        assert excinfo.value.code == EXIT_ERROR
        assert json.loads(capsys.readouterr().out)["type"] == "FileNotFoundError"


class TestSample:
    def test_report(self, monkeypatch, capsys, reference_dir):
        run_main(monkeypatch, "sample", "--reference-dir", str(reference_dir), "--trials", "3", "--seed", "1")
        payload = json.loads(capsys.readouterr().out)
        assert payload["trials"] == 3
        assert payload["graphs"] >= 10

    def test_bad_rate(self, monkeypatch, capsys, reference_dir):
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch, "sample", "--reference-dir", str(reference_dir), "--rate", "1.5")
        assert excinfo.value.code == EXIT_ERROR
        assert json.loads(capsys.readouterr().out)["type"] == "ValueError"


class TestConfigCommand:
    def test_set_then_show(self, monkeypatch, capsys, tmp_config):
        run_main(monkeypatch, "config", "--interas-cap", "9", "--solver-timeout-ms", "500")
        assert capsys.readouterr().out == ""
        run_main(monkeypatch, "config", "--show")
        payload = json.loads(capsys.readouterr().out)
        assert payload["interas_cap"] == 9
        assert payload["solver_timeout_ms"] == 500

    def test_no_flags_shows_defaults(self, monkeypatch, capsys, tmp_config):
        run_main(monkeypatch, "config")
        assert json.loads(capsys.readouterr().out)["reference_dir"] is None


class TestAnonymize:
    def test_success_prints_summary(self, monkeypatch, capsys, networks_dir, reference_dir, tmp_path):
        report = tmp_path / "report.json"
        run_main(
            monkeypatch, "anonymize",
            "-i", str(networks_dir / "campus"), "-o", str(tmp_path / "out"),
            "--reference-dir", str(reference_dir), "--seed", "7", "--report", str(report),
        )
        summary = json.loads(capsys.readouterr().out)
        assert summary["verified"] is True
        assert summary["actual_adds"] == 5
        assert json.loads(report.read_text())["schema"] == 1
        assert (tmp_path / "out" / "configs" / "r1.cfg").exists()

    def test_infeasible_exit_code(self, monkeypatch, capsys, networks_dir, reference_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run_main(
                monkeypatch, "anonymize",
                "-i", str(networks_dir / "campus"), "-o", str(tmp_path / "out"),
                "--reference-dir", str(reference_dir), "--k-routers", "50",
            )
        assert excinfo.value.code == EXIT_INFEASIBLE
        payload = json.loads(capsys.readouterr().out)
        assert payload["type"] == "Infeasible"
        assert payload["phase"] == "anonymize"

    def test_same_directory_is_an_error(self, monkeypatch, capsys, networks_dir):
        campus = str(networks_dir / "campus")
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch, "anonymize", "-i", campus, "-o", campus)
        assert excinfo.value.code == EXIT_ERROR
        assert json.loads(capsys.readouterr().out)["type"] == "ValidationError"

    def test_verification_failure_exit_code(self, monkeypatch, capsys, tmp_path):
        failed = RunReport(
            seed=0,
            mode=ExpansionMode.EMBEDDING,
            anonymizer=Anonymizer.GREEDY,
            repair_mode=RepairMode.CONSTRAINT,
            original_routers=1,
            original_hosts=2,
            requested_adds=1,
            actual_adds=1,
            equivalence=EquivalenceReport(missing=[MissingPath(src="h1", dst="h2", path=["h1", "r1", "h2"])]),
        )
        monkeypatch.setattr(cli, "run_pipeline", lambda cfg: failed)
        with pytest.raises(SystemExit) as excinfo:
            run_main(monkeypatch, "anonymize", "-i", str(tmp_path / "in"), "-o", str(tmp_path / "out"))
        assert excinfo.value.code == EXIT_VERIFICATION_FAILED
        out = capsys.readouterr().out
        assert '"verified": false' in out
        assert '"type": "VerificationFailed"' in out
