"""Scenario-config validation and the command-line runner: exit codes,
artifacts, determinism and error reporting."""

import json
import subprocess
import sys

import pytest

from peribond.cli import main
from peribond.config import ConfigError, parse_config, validate_config

GOOD_SAWTOOTH = {"experiment": "sawtooth", "seed": 7,
                 "sawtooth": {"N": 4, "delta": 0.02}}
GOOD_CHECKS = {"experiment": "checks", "seed": 3}
GOOD_DENSITY = {"experiment": "density", "seed": 1,
                "strain_m": 2,
                "potential": {"profile": "power", "p": 2.0},
                "density": {"matrices": [[1.0, 0.0, 0.0, 1.0],
                                         [2.0, 0.0, 0.0, 1.0]],
                            "order": 64}}


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload) if isinstance(payload, dict) else payload)
    return str(path)


class TestValidation:
    def test_good_configs_pass(self, tmp_path):
        for cfg in (GOOD_SAWTOOTH, GOOD_CHECKS, GOOD_DENSITY):
            parsed = parse_config(write(tmp_path, "c.json", cfg))
            validate_config(parsed)  # should not raise

    def test_parse_error_kind(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            parse_config(write(tmp_path, "bad.json", "{not json"))
        assert exc.value.kind == "parse"

    def test_unknown_experiment(self, tmp_path):
        cfg = parse_config(write(tmp_path, "c.json", {"experiment": "warp"}))
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        assert exc.value.kind == "validation"

    def test_all_problems_collected(self, tmp_path):
        bad = {"experiment": "sawtooth", "seed": -1, "mystery": 1,
               "sawtooth": {"N": 0, "delta": -2.0}}
        cfg = parse_config(write(tmp_path, "c.json", bad))
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        text = " ".join(exc.value.problems)
        assert "seed" in text and "mystery" in text
        assert "sawtooth.N" in text and "sawtooth.delta" in text
        assert len(exc.value.problems) >= 4

    def test_missing_required_block(self, tmp_path):
        cfg = parse_config(write(tmp_path, "c.json", {"experiment": "minimize"}))
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        assert any("requires block" in p for p in exc.value.problems)

    def test_matrix_shape_checked(self, tmp_path):
        bad = dict(GOOD_DENSITY)
        bad["density"] = {"matrices": [[1.0, 2.0, 3.0]]}
        cfg = parse_config(write(tmp_path, "c.json", bad))
        with pytest.raises(ConfigError):
            validate_config(cfg)

    def test_eps_must_decrease(self, tmp_path):
        bad = {"experiment": "linearize",
               "domain": {"dim": 1, "lo": 0.0, "hi": 1.0, "n_cells": 32},
               "micropotential": {"tag": "quartic"},
               "linearize": {"eps": [0.1, 0.2]}}
        cfg = parse_config(write(tmp_path, "c.json", bad))
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        assert any("decreasing" in p for p in exc.value.problems)


class TestCliExitCodes:
    def test_run_ok(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", GOOD_SAWTOOTH)
        assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 0
        assert "pass" in capsys.readouterr().out

    def test_parse_error_is_2(self, tmp_path, capsys):
        cfg = write(tmp_path, "bad.json", "{oops")
        assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "parse"
        assert json.loads((tmp_path / "out" / "error.json").read_text())["error"] == "parse"

    def test_validation_error_is_3(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", {"experiment": "sawtooth",
                                         "sawtooth": {"N": 0, "delta": 0.1}})
        assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "validation"

    def test_validate_subcommand(self, tmp_path, capsys):
        good = write(tmp_path, "good.json", GOOD_SAWTOOTH)
        assert main(["validate", good]) == 0
        bad = write(tmp_path, "bad.json", {"experiment": "nope"})
        assert main(["validate", bad]) == 3
        capsys.readouterr()

    def test_list_catalog(self, capsys):
        assert main(["list-catalog"]) == 0
        out = capsys.readouterr().out
        for word in ("experiments:", "sawtooth", "box", "fractional",
                     "quartic", "mbm", "cohesive"):
            assert word in out


class TestArtifacts:
    def test_summary_schema_and_csv(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", GOOD_SAWTOOTH)
        out = tmp_path / "out"
        assert main(["run", cfg, "--out", str(out)]) == 0
        capsys.readouterr()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["experiment"] == "sawtooth"
        assert summary["seed"] == 7
        assert summary["passed"] is True
        assert summary["artifacts"] == ["sawtooth.csv"]
        assert all(isinstance(v, bool) for v in summary["contracts"].values())
        lines = (out / "sawtooth.csv").read_text().strip().splitlines()
        assert lines[0].split(",")[0] == "N"
        assert len(lines) == 2

    def test_seed_override(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", GOOD_CHECKS)
        out = tmp_path / "out"
        assert main(["run", cfg, "--out", str(out), "--seed", "99"]) == 0
        capsys.readouterr()
        assert json.loads((out / "summary.json").read_text())["seed"] == 99


class TestDeterminism:
    def run_twice(self, tmp_path, cfg_payload, extra_second=()):
        cfg = write(tmp_path, "c.json", cfg_payload)
        outs = []
        for i, extra in enumerate([(), tuple(extra_second)]):
            out = tmp_path / f"out{i}"
            code = main(["run", cfg, "--out", str(out), *extra])
            assert code == 0
            outs.append(out)
        return outs

    def test_repeat_runs_byte_identical(self, tmp_path, capsys):
        a, b = self.run_twice(tmp_path, GOOD_DENSITY)
        capsys.readouterr()
        assert (a / "density.csv").read_bytes() == (b / "density.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path, capsys):
        a, b = self.run_twice(tmp_path, GOOD_DENSITY, extra_second=("--threads", "8"))
        capsys.readouterr()
        assert (a / "density.csv").read_bytes() == (b / "density.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_checks_reproducible_from_seed(self, tmp_path, capsys):
        a, b = self.run_twice(tmp_path, GOOD_CHECKS)
        capsys.readouterr()
        assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()


class TestConsoleScript:
    def test_module_entry_point(self, tmp_path):
        cfg = write(tmp_path, "c.json", GOOD_SAWTOOTH)
        proc = subprocess.run(
            [sys.executable, "-c",
             "import sys; from peribond.cli import main; sys.exit(main(sys.argv[1:]))",
             "run", cfg, "--out", str(tmp_path / "out")],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "pass" in proc.stdout
