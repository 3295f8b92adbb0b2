import json
from pathlib import Path

import pandas as pd
import pytest

from dataset_io.export import read_full_jsonl
from dataset_io.hashing import digest_bytes, jsonl_bytes
from dataset_io.manifest import read_manifest, write_manifest
from dataset_io.replay import load_trace, replay
from dataset_io.trace import TraceHeader
from evaluation.scoring import Outcome
from evaluation.termination import TerminalReason
from pipeline.batch import SUMMARY_COLUMNS, BatchMatrix, expand_matrix, load_matrix, run_batch
from pipeline.run_loop import execute_run, resolve_scenario, simulate
from pipeline.settings import CATALOG_ENV, CONFIG_ENV, load_settings
from policy_harness.binding import BuiltinPolicy, parse_policy
from scenario_model.errors import (
    CatalogError,
    ConfigurationError,
    EngineVersionError,
    IntegrityError,
    ReplayDivergenceError,
)
from scenario_model.overrides import Overrides
from scenario_model.types import HUMAN_CLASSES
from world_engine.engine import ENGINE_VERSION

CATALOG_DIR = Path(__file__).resolve().parent.parent / "catalog"


def run(spec, policy, tmp_path, config, **kwargs):
    return execute_run(spec, parse_policy(policy, tick_timeout_ms=2000), tmp_path / "run", config=config, **kwargs)


def test_run_directory_contents(minimal_spec, raster_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, raster_config)
    names = sorted(p.name for p in artifacts.directory.iterdir())
    assert names == ["manifest.json", "rasters.bin", "rasters.idx", "trace.csv", "trace.jsonl"]
    manifest = read_manifest(artifacts.directory)
    assert manifest.engine_version == ENGINE_VERSION
    assert manifest.seed == minimal_spec.default_seed
    assert manifest.policy == "builtin:emergency_brake"
    assert manifest.result.outcome == Outcome.SUCCESS
    assert manifest.trace_hash == artifacts.output.trace_hash
    assert len(read_full_jsonl(artifacts.directory / "trace.jsonl")) == len(artifacts.output.trace)


def test_unrecorded_raster_writes_no_pack(minimal_spec, fast_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, fast_config)
    assert not (artifacts.directory / "rasters.bin").exists()
    assert read_manifest(artifacts.directory).channels == ["lidar", "detections"]


def test_same_inputs_same_hash(catalog, fast_config, tmp_path):
    spec = catalog.get("luggage-fall")
    a = execute_run(spec, parse_policy("builtin:constant_speed"), tmp_path / "a", seed=3, config=fast_config)
    b = execute_run(spec, parse_policy("builtin:constant_speed"), tmp_path / "b", seed=3, config=fast_config)
    c = execute_run(spec, parse_policy("builtin:constant_speed"), tmp_path / "c", seed=4, config=fast_config)
    assert a.manifest.trace_hash == b.manifest.trace_hash
    assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()
    assert c.manifest.trace_hash != a.manifest.trace_hash


def test_luggage_fall_outcomes(catalog, fast_config, tmp_path):
    spec = catalog.get("luggage-fall")
    blind = run(spec, "builtin:constant_speed", tmp_path / "blind", fast_config).output.result
    assert blind.outcome == Outcome.COLLISION_FAILURE
    assert blind.terminal_reason == TerminalReason.COLLISION
    assert blind.collisions[0].actor_id == "suitcase"
    assert blind.exit_code == 1

    careful = run(spec, "builtin:emergency_brake", tmp_path / "careful", fast_config).output.result
    assert careful.outcome == Outcome.SUCCESS
    assert careful.collisions == []
    assert careful.exit_code == 0


def test_overrides_recorded_in_manifest(catalog, fast_config, tmp_path):
    spec = catalog.get("luggage-fall")
    overrides = Overrides(weather="fog-morning", trigger_shifts={"suitcase-falls": 0.5})
    artifacts = run(spec, "builtin:emergency_brake", tmp_path, fast_config, seed=11, overrides=overrides)
    manifest = artifacts.manifest
    assert manifest.overrides == {"weather": "fog-morning", "trigger_shifts": {"suitcase-falls": 0.5}}
    assert manifest.seed == 11
    assert replay(artifacts.directory).trace_hash == manifest.trace_hash


def test_replay_is_bit_exact(minimal_spec, raster_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, raster_config)
    report = replay(artifacts.directory)
    assert report.trace_hash == artifacts.manifest.trace_hash
    assert report.result == artifacts.manifest.result
    assert report.ticks == len(artifacts.output.trace)
    assert replay(artifacts.directory / "manifest.json").ticks == report.ticks


def test_replay_detects_tampered_bytes(minimal_spec, fast_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, fast_config)
    path = artifacts.directory / "trace.jsonl"
    path.write_bytes(path.read_bytes().replace(b'"tick":3}\n', b'"tick":3 }\n', 1))
    with pytest.raises(IntegrityError):
        load_trace(artifacts.directory)
    with pytest.raises(IntegrityError):
        replay(artifacts.directory)


def test_replay_detects_tampered_raster(minimal_spec, raster_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, raster_config)
    path = artifacts.directory / "rasters.bin"
    data = bytearray(path.read_bytes())
    data[4 + 10] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(IntegrityError):
        replay(artifacts.directory)


def test_replay_reports_first_divergent_tick(minimal_spec, fast_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, fast_config)
    directory = artifacts.directory
    records = read_full_jsonl(directory / "trace.jsonl")
    records[10]["sim_time"] += 0.001
    body = jsonl_bytes(records)
    (directory / "trace.jsonl").write_bytes(body)
    manifest = read_manifest(directory)
    header_line = TraceHeader.model_validate(manifest.trace_header).line()
    write_manifest(manifest.model_copy(update={"trace_hash": digest_bytes(header_line, body)}),
                   directory / "manifest.json")
    with pytest.raises(ReplayDivergenceError) as info:
        replay(directory)
    assert info.value.tick == 10


def test_replay_refuses_other_engine_major(minimal_spec, fast_config, tmp_path):
    artifacts = run(minimal_spec, "builtin:emergency_brake", tmp_path, fast_config)
    path = artifacts.directory / "manifest.json"
    data = json.loads(path.read_text())
    data["engine_version"] = "2.0.0"
    path.write_text(json.dumps(data))
    with pytest.raises(EngineVersionError) as info:
        replay(artifacts.directory)
    assert info.value.exit_code == 5


def test_external_agent_fooled_by_stop_sign_advert(catalog, fast_config, agent_policy, tmp_path):
    spec = catalog.get("stop-sign-ad")
    artifacts = run(spec, agent_policy("stop_sign_agent.py"), tmp_path, fast_config)
    result = artifacts.output.result
    assert result.outcome == Outcome.STALLED
    assert result.exit_code == 1
    assert result.collisions == []
    assert artifacts.manifest.policy.startswith("exec:")
    assert replay(artifacts.directory).trace_hash == artifacts.manifest.trace_hash


def test_builtin_ignores_stop_sign_advert(catalog, fast_config, tmp_path):
    result = run(catalog.get("stop-sign-ad"), "builtin:emergency_brake", tmp_path, fast_config).output.result
    assert result.outcome == Outcome.SUCCESS


def test_dying_agent_is_a_policy_fault(minimal_spec, fast_config, agent_policy, tmp_path):
    artifacts = run(minimal_spec, agent_policy("dying_agent.py"), tmp_path, fast_config)
    result = artifacts.output.result
    assert result.outcome == Outcome.POLICY_FAULT
    assert result.exit_code == 3
    records = artifacts.output.trace.records
    assert len(records) == 6
    assert records[-1]["action"] is None
    assert records[-1]["terminal"]["reason"] == "policy_fault"
    assert replay(artifacts.directory).result == result


def test_passive_runs_fire_triggers_without_reaching_goal(catalog, fast_config):
    for spec in catalog:
        header = TraceHeader(engine_version=ENGINE_VERSION, scenario_id=spec.id, seed=spec.default_seed,
                             policy="builtin:passive", dt=fast_config.dt, channels=list(fast_config.channels))
        output = simulate(spec, spec.default_seed, BuiltinPolicy("passive"), header, fast_config)
        assert output.result.outcome in (Outcome.STALLED, Outcome.COLLISION_FAILURE), spec.id
        assert not output.world.goal_reached, spec.id
        assert output.world.fired_triggers, spec.id


def test_resolve_scenario(minimal_text, tmp_path):
    path = tmp_path / "road.3cs"
    path.write_text(minimal_text)
    assert resolve_scenario(path, CATALOG_DIR).id == "straight-road"
    assert resolve_scenario("luggage-fall", CATALOG_DIR).id == "luggage-fall"
    with pytest.raises(ConfigurationError):
        resolve_scenario(tmp_path / "missing.3cs", CATALOG_DIR)
    with pytest.raises(CatalogError):
        resolve_scenario("no-such-scenario", CATALOG_DIR)


# batch

def write_matrix(tmp_path, text):
    path = tmp_path / "matrix.yaml"
    path.write_text(text)
    return path


def test_matrix_expansion(catalog, tmp_path):
    matrix = load_matrix(write_matrix(tmp_path, """\
scenarios: [luggage-fall, stop-sign-ad]
weathers: [clear-noon, fog-morning]
seeds: [1, 2, 3]
trigger_shifts: [0.0, 0.5]
"""))
    cells = expand_matrix(matrix, catalog)
    assert len(cells) == 2 * 2 * 3 * 2
    first = cells[0]
    assert first.directory(tmp_path).relative_to(tmp_path).as_posix() == "luggage-fall/1/clear-noon_none_0"
    assert cells[1].overrides().trigger_shifts == {"suitcase-falls": 0.5, "suitcase-cleared": 0.5}
    assert len({c.directory(tmp_path) for c in cells}) == len(cells)


def test_matrix_by_category(catalog):
    matrix = BatchMatrix(category="evidence", weathers=["clear-noon"], seeds=[1])
    cells = expand_matrix(matrix, catalog)
    assert {c.scenario.category.value for c in cells} == {"EvidenceBasedAnomaly"}
    assert len(cells) == len(catalog.by_category(cells[0].scenario.category))


@pytest.mark.parametrize("text", [
    "scenarios: [luggage-fall]\nweathers: []\nseeds: [1]\n",
    "scenarios: [luggage-fall]\nweathers: [acid-rain]\nseeds: [1]\n",
    "weathers: [clear-noon]\nseeds: [1]\n",
    "scenarios: [luggage-fall]\nweathers: [clear-noon]\nseeds: [1]\ncolour: red\n",
    "scenarios: [luggage-fall\n",
])
def test_bad_matrix(tmp_path, text):
    with pytest.raises(ConfigurationError):
        load_matrix(write_matrix(tmp_path, text))


def test_batch_summary(catalog, fast_config, tmp_path):
    matrix = BatchMatrix(scenarios=["luggage-fall"], weathers=["clear-noon"], seeds=[1, 2],
                         densities=["none", "low"])
    cells = expand_matrix(matrix, catalog)
    report = run_batch(cells, parse_policy("builtin:emergency_brake"), tmp_path / "serial", fast_config)
    assert report.all_completed
    frame = pd.read_csv(report.summary_path, keep_default_na=False)
    assert tuple(frame.columns) == SUMMARY_COLUMNS
    assert len(frame) == 4
    assert frame["seed"].tolist() == [1, 1, 2, 2]
    assert frame["density"].tolist() == ["low", "none", "low", "none"]
    for row in report.rows:
        assert read_manifest(row["directory"]).trace_hash == row["trace_hash"]

    parallel = run_batch(cells, parse_policy("builtin:emergency_brake"), tmp_path / "parallel", fast_config, jobs=2)
    assert [r["trace_hash"] for r in parallel.rows] == [r["trace_hash"] for r in report.rows]


def test_batch_cell_failure_is_reported(catalog, fast_config, tmp_path):
    cells = expand_matrix(BatchMatrix(scenarios=["luggage-fall"], weathers=["clear-noon"], seeds=[1]), catalog)
    binding = parse_policy("exec:/nonexistent/agent --flag")
    report = run_batch(cells, binding, tmp_path, fast_config)
    assert not report.all_completed
    assert report.rows[0]["error"]
    assert pd.read_csv(report.summary_path)["completed"].tolist() == [False]


# settings

def test_default_settings():
    settings = load_settings()
    assert settings.engine.dt == 0.05
    assert settings.perception.lidar_rays == 72
    assert settings.output.record == ["lidar", "detections", "raster"]
    assert settings.catalog_dir().name == "catalog"


def test_settings_from_env(tmp_path, monkeypatch):
    path = tmp_path / "cornersim.yaml"
    path.write_text("engine: {dt: 0.1}\noutput: {record: [raster, lidar]}\nlogging: {level: debug}\n")
    monkeypatch.setenv(CONFIG_ENV, str(path))
    monkeypatch.setenv(CATALOG_ENV, str(tmp_path / "scenarios"))
    settings = load_settings()
    assert settings.engine.dt == 0.1
    assert settings.output.record == ["lidar", "raster"]
    assert settings.logging.level == "DEBUG"
    assert settings.catalog_dir() == tmp_path / "scenarios"


@pytest.mark.parametrize("text", [
    "engine: {dt: 0}\n",
    "engine: {tick: 1}\n",
    "output: {record: [sonar]}\n",
    "logging: {level: loud}\n",
    "- just\n- a list\n",
    "engine: {dt: [\n",
])
def test_bad_settings(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        load_settings(path)


def test_missing_settings_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_settings(tmp_path / "nope.yaml")


def test_random_agent_run_replays_exactly(minimal_spec, fast_config, agent_policy, tmp_path):
    artifacts = run(minimal_spec, agent_policy("random_agent.py"), tmp_path, fast_config)
    report = replay(artifacts.directory)
    assert report.trace_hash == artifacts.manifest.trace_hash
    assert report.result == artifacts.output.result


def test_emergency_brake_spares_the_child(catalog, fast_config, tmp_path):
    result = run(catalog.get("ball-evidence-child"), "builtin:emergency_brake", tmp_path, fast_config).output.result
    assert not any(c.actor_true_class in HUMAN_CLASSES for c in result.collisions)
