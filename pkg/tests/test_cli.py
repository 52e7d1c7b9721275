"""Tests for the command-line entry point."""
# pylint: disable=C

import json
import logging

import pytest

from cli_app import build_parser, main
from utils.logger import LoggerFactory


@pytest.fixture
def config_file(tmp_path):
    def make(experiment, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"experiment": experiment}), encoding="utf-8")
        return str(path)
    return make


@pytest.fixture(autouse=True)
def restore_log_level():
    yield
    LoggerFactory.update_all_levels(logging.INFO)


class TestParser:
    def test_rejects_unknown_task(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["median"])

    def test_overrides_default_to_none(self):
        args = build_parser().parse_args(["tukey"])
        assert args.seed is None and args.trials is None and args.emit_plot_data is None


class TestMain:
    def test_small_run_succeeds(self, tmp_path, config_file):
        path = config_file({"task": "ip-bench", "seed": 1, "X": 8})
        out = tmp_path / "out"
        assert main(["ip-bench", "--config", path, "--trials", "3", "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["trials"] == 3

    def test_task_argument_wins(self, tmp_path, config_file):
        path = config_file({"task": "tukey", "seed": 1, "X": 8})
        assert main(["ip-bench", "--config", path, "--out", str(tmp_path / "out")]) == 0
        assert json.loads((tmp_path / "out" / "summary.json").read_text(encoding="utf-8"))["task"] == "ip-bench"

    def test_missing_seed_is_input_error(self, tmp_path, config_file, capsys):
        path = config_file({"task": "tukey"})
        assert main(["tukey", "--config", path, "--out", str(tmp_path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert main(["tukey", "--config", str(tmp_path / "absent.json")]) == 2

    def test_malformed_csv(self, tmp_path, config_file):
        data = tmp_path / "points.csv"
        data.write_text("x1,x2\n1,2\n1,two\n", encoding="utf-8")
        path = config_file({"task": "tukey", "seed": 1, "d": 2, "X": 4, "input_path": str(data)})
        assert main(["tukey", "--config", path, "--out", str(tmp_path / "out")]) == 2

    def test_insufficient_samples(self, tmp_path, config_file):
        path = config_file({"task": "tukey", "seed": 1, "d": 1, "X": 20, "n": 5})
        assert main(["tukey", "--config", path, "--out", str(tmp_path / "out")]) == 3

    def test_bad_log_level(self, config_file):
        path = config_file({"task": "tukey", "seed": 1})
        assert main(["tukey", "--config", path, "--log-level", "LOUD"]) == 2

    def test_log_level_is_applied(self, tmp_path, config_file):
        path = config_file({"task": "ip-bench", "seed": 1, "X": 8, "trials": 2})
        assert main(["ip-bench", "--config", path, "--out", str(tmp_path / "out"), "--log-level", "warning"]) == 0
        handlers = logging.getLogger("services.experiments").handlers
        assert handlers and all(h.level == logging.WARNING for h in handlers)
