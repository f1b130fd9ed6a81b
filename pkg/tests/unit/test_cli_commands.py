"""
Unit tests for CLI command functionality and error handling.

Simulation commands run against the small corridor layout so that each
invocation finishes in well under a second.
"""

import json

import pandas as pd
import pytest
import yaml

import deplane.cli
from deplane.cabin import dump_layout
from deplane.cli import main, parse_levels
from deplane.stats import NoCompletedRuns


@pytest.fixture
def corridor_file(corridor_layout, temp_dir):
    path = temp_dir / "corridor.json"
    with open(path, "w") as f:
        dump_layout(corridor_layout, f)
    return path


def simulate_args(command, corridor_file, out, *extra):
    return [command, "--layout", str(corridor_file), "-j", "1", "-o", str(out), *extra]


@pytest.mark.unit
@pytest.mark.cli
class TestParseLevels:
    """Test the level list syntax."""

    def test_inclusive_range(self):
        levels = parse_levels("0.0:1.0:0.1")
        assert len(levels) == 11
        assert levels[0] == 0.0
        assert levels[3] == 0.3
        assert levels[-1] == 1.0

    def test_occupancy_range(self):
        levels = parse_levels("0.1:1.0:0.1")
        assert levels == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)

    def test_list_and_single(self):
        assert parse_levels("0.5, 1.0") == (0.5, 1.0)
        assert parse_levels("0.3") == (0.3,)

    @pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "0:1", "a,b"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_levels(text)


@pytest.mark.unit
@pytest.mark.cli
class TestCLIBasics:
    """Test basic CLI functionality."""

    def test_cli_version_command(self, cli_runner):
        result = cli_runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "deplane 0.1.0" in result.output

    def test_cli_help_command(self, cli_runner):
        result = cli_runner.invoke(main, ["--help"])

        assert result.exit_code == 0
        assert "Usage:" in result.output
        for command in ("run", "sweep", "rerun", "layout"):
            assert command in result.output

    def test_no_command_shows_help(self, cli_runner):
        result = cli_runner.invoke(main, [])
        assert result.exit_code == 0
        assert "Commands:" in result.output

    def test_run_help(self, cli_runner):
        result = cli_runner.invoke(main, ["run", "--help"])
        assert result.exit_code == 0
        assert "--baseline" in result.output
        assert "--exit-headway" in result.output


@pytest.mark.unit
@pytest.mark.cli
class TestRunCommand:
    """Test the run command."""

    def test_run_writes_bundle(self, cli_runner, corridor_file, temp_dir):
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main, simulate_args("run", corridor_file, out, "--runs", "2", "--seed", "42")
        )

        assert result.exit_code == 0, result.output
        assert "✅ Results written to" in result.output
        summary = pd.read_csv(out / "summary.csv")
        assert len(summary) == 1
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "run"
        assert manifest["scenario"]["master_seed"] == 42
        assert manifest["grid"]["n_runs"] == 2

    def test_worker_count_reaches_batch(self, cli_runner, corridor_file, temp_dir, mocker):
        spy = mocker.spy(deplane.cli, "run_batch")
        result = cli_runner.invoke(
            main,
            ["run", "--layout", str(corridor_file), "-j", "3", "-o", str(temp_dir / "out"),
             "--runs", "2"],
        )

        assert result.exit_code == 0, result.output
        spy.assert_called_once()
        assert spy.call_args.kwargs["workers"] == 3

    def test_no_completed_runs_exits_nonzero(self, cli_runner, corridor_file, temp_dir, mocker):
        mocker.patch(
            "deplane.cli.write_bundle",
            side_effect=NoCompletedRuns("All 2 runs hit max_time", 1.0, 0.0),
        )
        result = cli_runner.invoke(
            main, simulate_args("run", corridor_file, temp_dir / "out", "--runs", "2")
        )

        assert result.exit_code == 1
        assert "❌ All 2 runs hit max_time" in result.output
        assert "Partial results written to" in result.output

    def test_baseline_conflicts_with_levels(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main,
            simulate_args("run", corridor_file, temp_dir / "out", "--baseline", "--occupancy", "0.5"),
        )
        assert result.exit_code == 1
        assert "--baseline cannot be combined" in result.output

    def test_invalid_occupancy(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main, simulate_args("run", corridor_file, temp_dir / "out", "--occupancy", "1.5")
        )
        assert result.exit_code == 1
        assert "❌ Occupancy must be in (0, 1]" in result.output

    def test_invalid_max_time(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main, simulate_args("run", corridor_file, temp_dir / "out", "--max-time", "10")
        )
        assert result.exit_code == 1
        assert "max_time must be at least 90 seconds" in result.output

    def test_quota_mode_and_headway(self, cli_runner, corridor_file, temp_dir):
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main,
            simulate_args(
                "run", corridor_file, out,
                "--runs", "1", "--bag-grab", "0.5", "--bag-mode", "quota",
                "--exit-headway", "1.0",
            ),
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"]["bag_mode"] == "quota"
        assert manifest["scenario"]["sim"]["exit_headway"] == 1.0

    def test_scenario_file(self, cli_runner, corridor_file, temp_dir):
        scenario = temp_dir / "cell.yaml"
        scenario.write_text(
            yaml.safe_dump({"n_runs": 2, "bag_grab_p": 0.3, "master_seed": 8})
        )
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main,
            simulate_args("run", corridor_file, out, "--scenario", str(scenario), "--seed", "9"),
        )

        assert result.exit_code == 0, result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["scenario"]["bag_grab_p"] == 0.3
        assert manifest["scenario"]["master_seed"] == 9
        assert manifest["grid"]["n_runs"] == 2

    def test_bad_scenario_file(self, cli_runner, corridor_file, temp_dir):
        scenario = temp_dir / "cell.json"
        scenario.write_text(json.dumps({"available_exits": ["1L", "8X"]}))
        result = cli_runner.invoke(
            main,
            simulate_args("run", corridor_file, temp_dir / "out", "--scenario", str(scenario)),
        )
        assert result.exit_code == 1
        assert "Unknown exits: 8X" in result.output

    def test_invalid_layout_file(self, cli_runner, temp_dir):
        broken = temp_dir / "broken.json"
        broken.write_text("{}")
        result = cli_runner.invoke(
            main, simulate_args("run", broken, temp_dir / "out", "--runs", "1")
        )
        assert result.exit_code == 1
        assert "❌" in result.output

    def test_progress_json(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main,
            simulate_args("run", corridor_file, temp_dir / "out", "--runs", "2", "--progress-json"),
        )
        assert result.exit_code == 0, result.output
        assert '{"cells_done": 1, "cells_total": 1, "runs_done": 2}' in result.output

    def test_trace_runs(self, cli_runner, corridor_file, temp_dir):
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main,
            simulate_args("run", corridor_file, out, "--runs", "2", "--trace-runs", "1"),
        )
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in (out / "traces").iterdir()) == ["cell000_run000.csv"]


@pytest.mark.unit
@pytest.mark.cli
class TestSweepCommand:
    """Test the sweep command."""

    def test_sweep_grid(self, cli_runner, corridor_file, temp_dir):
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main,
            simulate_args(
                "sweep", corridor_file, out,
                "--occupancy", "0.5,1.0", "--bag-grab", "0.0:0.5:0.5", "--runs", "2",
            ),
        )

        assert result.exit_code == 0, result.output
        heatmap = pd.read_csv(out / "heatmap.csv")
        assert len(heatmap) == 4
        assert heatmap["occupancy"].tolist() == [0.5, 0.5, 1.0, 1.0]
        assert heatmap["bag_grab"].tolist() == [0.0, 0.5, 0.0, 0.5]

    def test_bad_range(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main, simulate_args("sweep", corridor_file, temp_dir / "out", "--occupancy", "1:0:0.1")
        )
        assert result.exit_code == 2
        assert "stop is below start" in result.output

    def test_levels_out_of_range(self, cli_runner, corridor_file, temp_dir):
        result = cli_runner.invoke(
            main,
            simulate_args("sweep", corridor_file, temp_dir / "out", "--bag-grab", "0.5,1.5"),
        )
        assert result.exit_code == 1
        assert "bag-grab levels must lie in [0, 1]" in result.output

    def test_empty_cell_fails_after_writing_runs(self, cli_runner, corridor_file, temp_dir):
        out = temp_dir / "out"
        result = cli_runner.invoke(
            main,
            simulate_args(
                "sweep", corridor_file, out, "--occupancy", "0.1,1.0", "--bag-grab", "0.0",
                "--runs", "1",
            ),
        )
        assert result.exit_code == 1
        assert "leaves no passengers" in result.output
        assert (out / "runs.csv").exists()


@pytest.mark.unit
@pytest.mark.cli
class TestRerunCommand:
    """Test regenerating a bundle from its manifest."""

    def test_rerun_is_byte_identical(self, cli_runner, corridor_file, temp_dir):
        first = temp_dir / "first"
        second = temp_dir / "second"
        result = cli_runner.invoke(
            main,
            simulate_args(
                "sweep", corridor_file, first,
                "--occupancy", "1.0", "--bag-grab", "0.0,0.5", "--runs", "3",
            ),
        )
        assert result.exit_code == 0, result.output

        result = cli_runner.invoke(
            main, ["rerun", str(first / "manifest.json"), "-o", str(second), "-j", "1"]
        )
        assert result.exit_code == 0, result.output

        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_rerun_bad_manifest(self, cli_runner, temp_dir):
        manifest = temp_dir / "manifest.json"
        manifest.write_text('{"version": "0.1.0"}')
        result = cli_runner.invoke(main, ["rerun", str(manifest)])
        assert result.exit_code == 1
        assert "Cannot rerun" in result.output

    def test_rerun_missing_file(self, cli_runner, temp_dir):
        result = cli_runner.invoke(main, ["rerun", str(temp_dir / "absent.json")])
        assert result.exit_code == 2


@pytest.mark.unit
@pytest.mark.cli
class TestLayoutCommands:
    """Test layout emit and check."""

    def test_emit_to_stdout(self, cli_runner):
        result = cli_runner.invoke(main, ["layout", "emit"])
        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert len(data["seats"]) == 420
        assert data["notes"]["load_balanced_rows"]

    def test_emit_then_check(self, cli_runner):
        emitted = cli_runner.invoke(main, ["layout", "emit"]).stdout
        result = cli_runner.invoke(main, ["layout", "check", "-"], input=emitted)

        assert result.exit_code == 0, result.output
        assert "✅ Layout is valid: 420 seats" in result.output
        assert "zone 3: 155" in result.output

    def test_emit_to_file(self, cli_runner, temp_dir):
        path = temp_dir / "777.json"
        result = cli_runner.invoke(main, ["layout", "emit", "-o", str(path)])

        assert result.exit_code == 0
        assert "420-seat layout" in result.output
        assert json.loads(path.read_text())["name"].startswith("777-200")

    def test_check_corrupted_layout(self, cli_runner, corridor_file):
        data = json.loads(corridor_file.read_text())
        data["regions"][2]["rect"] = [1.0, 1.0, 1.33, 2.5]
        corridor_file.write_text(json.dumps(data))

        result = cli_runner.invoke(main, ["layout", "check", str(corridor_file)])

        assert result.exit_code == 1
        assert "violation(s):" in result.output
        assert "  • overlap: regions 0 and 2 overlap" in result.output

    def test_check_unparseable(self, cli_runner, temp_dir):
        path = temp_dir / "broken.json"
        path.write_text("not json")
        result = cli_runner.invoke(main, ["layout", "check", str(path)])
        assert result.exit_code == 1
        assert "❌ Layout file is not valid JSON" in result.output
