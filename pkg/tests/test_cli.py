import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from interface.cli import app
from scenario_model.types import ScenarioSpec
from scenario_model.weather import weather_ids

ROOT = Path(__file__).resolve().parent.parent

runner = CliRunner()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cornersim.yaml"
    path.write_text(f"""\
perception: {{lidar_rays: 36, lidar_max_range: 50.0, raster_cells: 32, raster_resolution: 1.0}}
policy: {{tick_timeout_ms: 2000}}
output: {{root: "{(tmp_path / 'runs').as_posix()}"}}
catalog: {{directory: "{(ROOT / 'catalog').as_posix()}"}}
""")
    return path


@pytest.fixture
def cli(config_file):
    def invoke(*args):
        return runner.invoke(app, ["--config", str(config_file), *args])
    return invoke


def test_list(cli):
    result = cli("list")
    assert result.exit_code == 0
    ids = [line.split()[0] for line in result.output.strip().splitlines()]
    assert len(ids) == 32
    assert ids == sorted(ids)

    evidence = cli("list", "--category", "evidence", "--prefix", "luggage")
    assert evidence.exit_code == 0
    assert [line.split()[0] for line in evidence.output.strip().splitlines()] == ["luggage-fall", "luggage-fall-night"]


def test_list_unknown_category(cli):
    assert cli("list", "--category", "weird").exit_code == 2


def test_validate(cli, minimal_text, tmp_path):
    good = tmp_path / "road.3cs"
    good.write_text(minimal_text)
    result = cli("validate", str(good))
    assert result.exit_code == 0
    assert "scenario 'straight-road' is valid" in result.output

    bad = tmp_path / "bad.3cs"
    bad.write_text(minimal_text.replace("x_min: 150.0", "x_min: 250.0").replace("x_max: 170.0", "x_max: 260.0"))
    result = cli("validate", str(bad))
    assert result.exit_code == 2
    assert "GOAL_OFF_ROAD" in result.output

    broken = tmp_path / "broken.3cs"
    broken.write_text("schema_version: 1\nscenario: [\n")
    assert cli("validate", str(broken)).exit_code == 2


def test_validate_catalog_files(cli):
    for path in sorted((ROOT / "catalog").rglob("*.3cs"))[:4]:
        assert cli("validate", str(path)).exit_code == 0, path


def test_run_exit_codes(cli, tmp_path):
    ok = cli("run", "luggage-fall", "--out", str(tmp_path / "ok"))
    assert ok.exit_code == 0, ok.output
    assert "outcome:    success (goal)" in ok.output
    assert (tmp_path / "ok" / "manifest.json").exists()

    crash = cli("run", "luggage-fall", "--policy", "builtin:constant_speed", "--out", str(tmp_path / "crash"))
    assert crash.exit_code == 1
    assert "collision_failure" in crash.output


def test_run_default_directory(cli, tmp_path):
    result = cli("run", "luggage-fall", "--seed", "5", "--record", "lidar")
    assert result.exit_code == 0
    run_dir = tmp_path / "runs" / "luggage-fall" / "5"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["channels"] == ["lidar"]
    assert manifest["seed"] == 5
    assert not (run_dir / "rasters.bin").exists()


def test_run_overrides(cli, tmp_path):
    result = cli("run", "luggage-fall", "--weather", "fog-morning", "--density", "low",
                 "--trigger-shift", "0.5", "--ego-speed", "8", "--out", str(tmp_path / "o"))
    assert result.exit_code in (0, 1)
    overrides = json.loads((tmp_path / "o" / "manifest.json").read_text())["overrides"]
    assert overrides == {"weather": "fog-morning", "traffic_density": "low",
                         "trigger_shifts": {"suitcase-cleared": 0.5, "suitcase-falls": 0.5}, "ego_speed": 8.0}


@pytest.mark.parametrize("args", [
    ["run", "no-such-scenario"],
    ["run", "luggage-fall", "--weather", "acid-rain"],
    ["run", "luggage-fall", "--record", "sonar"],
    ["run", "luggage-fall", "--policy", "builtin:nope"],
    ["run", "luggage-fall", "--policy", "telepathy"],
])
def test_run_usage_errors(cli, args):
    assert cli(*args).exit_code == 2


def test_run_policy_startup_failure(cli, tmp_path):
    result = cli("run", "luggage-fall", "--policy", "exec:/nonexistent/agent", "--out", str(tmp_path / "x"))
    assert result.exit_code == 3


def test_replay_and_export(cli, tmp_path):
    run_dir = tmp_path / "r"
    assert cli("run", "stop-sign-ad", "--out", str(run_dir)).exit_code == 0

    result = cli("replay", str(run_dir / "manifest.json"))
    assert result.exit_code == 0, result.output
    assert "replay of stop-sign-ad" in result.output and "matches" in result.output

    result = cli("export", str(run_dir), "--format", "flat-csv", "--out", str(tmp_path / "csv"))
    assert result.exit_code == 0
    assert (tmp_path / "csv" / "trace.csv").exists()

    result = cli("export", str(run_dir), "-f", "raster-pack", "-o", str(tmp_path / "pack"))
    assert result.exit_code == 0
    assert (tmp_path / "pack" / "rasters.idx").read_text() == (run_dir / "rasters.idx").read_text()

    trace = run_dir / "trace.jsonl"
    trace.write_bytes(trace.read_bytes() + b"\n")
    assert cli("replay", str(run_dir)).exit_code == 4
    assert cli("export", str(run_dir), "-f", "full-jsonl", "-o", str(tmp_path / "j")).exit_code == 4


def test_replay_missing_manifest(cli, tmp_path):
    assert cli("replay", str(tmp_path)).exit_code == 4


def test_batch(cli, tmp_path):
    matrix = tmp_path / "matrix.yaml"
    matrix.write_text(f"""\
scenarios: [luggage-fall]
weathers: [clear-noon]
seeds: [1, 2]
out: "{(tmp_path / 'batch').as_posix()}"
""")
    result = cli("batch", str(matrix))
    assert result.exit_code == 0, result.output
    assert "Matrix: 2 cells" in result.output
    assert (tmp_path / "batch" / "summary.csv").exists()
    assert (tmp_path / "batch" / "luggage-fall" / "2" / "clear-noon_none_0" / "manifest.json").exists()


def test_batch_exit_code_tracks_completion_not_outcome(cli, tmp_path):
    matrix = tmp_path / "matrix.yaml"
    body = f"""\
scenarios: [luggage-fall]
weathers: [clear-noon]
seeds: [1]
out: "{(tmp_path / 'batch').as_posix()}"
"""
    matrix.write_text(body + "policy: builtin:constant_speed\n")
    result = cli("batch", str(matrix))
    assert result.exit_code == 0, result.output
    assert "collision_failure" in result.output

    matrix.write_text(body + "policy: exec:/nonexistent/agent\n")
    result = cli("batch", str(matrix))
    assert result.exit_code == 1
    assert "error:" in result.output


def test_weathers(cli):
    result = cli("weathers")
    assert result.exit_code == 0
    assert [line.split()[0] for line in result.output.strip().splitlines()] == weather_ids()


def test_show_round_trips(cli, tmp_path):
    result = cli("show", "luggage-fall")
    assert result.exit_code == 0
    assert result.output.startswith("schema_version: 1\n")
    path = tmp_path / "copy.3cs"
    path.write_text(result.output)
    assert cli("validate", str(path)).exit_code == 0


def test_schema_matches_documented_schema(cli):
    result = cli("schema")
    assert result.exit_code == 0
    generated = json.loads(result.output)
    assert set(generated["properties"]) == set(ScenarioSpec.model_fields)
    documented = json.loads((ROOT / "docs" / "scenario-schema.json").read_text())
    assert set(documented["$defs"]["Scenario"]["properties"]) == set(ScenarioSpec.model_fields)


def test_bad_config(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("engine: {dt: -1}\n")
    assert runner.invoke(app, ["--config", str(path), "weathers"]).exit_code == 2
