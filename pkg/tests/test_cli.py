"""CLI tests: argument handling, exit statuses and printed output."""
import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from crnsim.cli import build_parser, get_run_command, main, resolve_config


class TestGetRunCommand:
    def test_script_mode(self, monkeypatch):
        monkeypatch.delattr(sys, 'frozen', raising=False)
        assert get_run_command() == "python crn_sim.py"

    def test_frozen_mode(self, monkeypatch):
        monkeypatch.setattr(sys, 'frozen', True, raising=False)
        assert get_run_command() == "./crn_sim"


class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_unknown_mode_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--mode", "fastest"])

    def test_defaults(self):
        args = build_parser().parse_args(["run"])
        assert args.out == Path("results")
        assert args.config is None
        assert not args.verbose

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "sim.txt"
        path.write_text("rounds = 500\nseed = 3\n")
        args = build_parser().parse_args(["run", "--config", str(path), "--seed", "11", "--mode", "sendora_like"])
        config = resolve_config(args)
        assert config['rounds'] == 500
        assert config['seed'] == 11
        assert config['sleep'] == "none"


class TestRunCommand:
    def test_run_writes_results(self, tmp_path, capsys):
        status = main(["run", "--rounds", "10", "--out", str(tmp_path)])

        assert status == 0
        out = capsys.readouterr().out
        assert "CRN SENSOR NETWORK SIMULATION" in out
        assert "Energy consumed" in out
        assert f"Results written to {tmp_path}" in out
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary['rounds'] == 10

    def test_bad_config_file(self, tmp_path, capsys):
        path = tmp_path / "sim.txt"
        path.write_text("rounds = 10\nradius = 4\n")
        status = main(["run", "--config", str(path), "--out", str(tmp_path / "out")])

        assert status == 1
        assert "Error: line 2: unknown key 'radius'" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_baseline_with_sleep_policy_rejected(self, tmp_path, capsys):
        status = main(["run", "--mode", "leachc_like", "--sleep", "all_sleep_ns", "--out", str(tmp_path)])
        assert status == 1
        assert "requires sleep = none" in capsys.readouterr().err

    def test_runtime_failure(self, tmp_path, mocker):
        mocker.patch("crnsim.workflow.run_experiment", side_effect=RuntimeError("boom"))
        status = main(["run", "--rounds", "5", "--out", str(tmp_path)])
        assert status == 2
        assert (tmp_path / "critical_error.log").exists()


class TestSweepCommand:
    def test_sweep_prints_comparison(self, tmp_path, capsys):
        status = main(["sweep", "--param", "mode", "--values", "cusf, sendora_like",
                       "--rounds", "10", "--out", str(tmp_path)])

        assert status == 0
        out = capsys.readouterr().out
        assert "Sweep over mode" in out
        assert "sendora_like" in out
        assert (tmp_path / "mode-cusf" / "rounds.csv").exists()
        assert (tmp_path / "mode-sendora_like" / "summary.json").exists()
        assert (tmp_path / "comparison.csv").exists()

    def test_unsweepable_param(self, tmp_path, capsys):
        status = main(["sweep", "--param", "e0", "--values", "1,2", "--out", str(tmp_path)])
        assert status == 1
        assert "Sweep over" not in capsys.readouterr().out

    def test_sensing_range_sweep_past_radio_range(self, tmp_path, capsys):
        status = main(["sweep", "--param", "r_s", "--values", "5,10,15,20",
                       "--rounds", "5", "--out", str(tmp_path)])

        assert status == 0
        assert "Sweep over r_s" in capsys.readouterr().out
        for label in ("5.0", "10.0", "15.0", "20.0"):
            assert (tmp_path / f"r_s-{label}" / "summary.json").exists()
        assert "r_cr = 20.0" in (tmp_path / "r_s-15.0" / "config.txt").read_text()
        assert "r_cr = 40.0" in (tmp_path / "r_s-20.0" / "config.txt").read_text()


class TestExitStatus:
    def test_unknown_choice_is_config_error(self, capsys):
        assert main(["run", "--mode", "fastest"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_subcommand_is_config_error(self):
        assert main([]) == 1

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == 0
        assert "Cognitive-radio sensor network simulator" in capsys.readouterr().out
