import json
import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from dataset_io.export import (
    FLAT_CSV_COLUMNS,
    ExportFormat,
    export_trace,
    read_full_jsonl,
    read_raster_pack,
    write_raster_pack,
)
from dataset_io.hashing import canonical_json, digest_bytes, jsonl_bytes
from dataset_io.manifest import RunManifest, check_engine_version, read_manifest, write_manifest
from dataset_io.trace import Trace, TraceHeader, first_divergence, parse_channels, record_tick, trace_hash
from perception.observation import observe
from pipeline.run_loop import simulate
from policy_harness.actions import STRAIGHT
from policy_harness.binding import BuiltinPolicy
from scenario_model.errors import ConfigurationError, EngineVersionError, IntegrityError, TraceConsistencyError
from scenario_model.types import TrafficDensity
from scenario_model.weather import get_weather
from world_engine.engine import ENGINE_VERSION, init_world


def header(**changes):
    data = dict(engine_version=ENGINE_VERSION, scenario_id="straight-road", seed=7,
                policy="builtin:passive", dt=0.05)
    data.update(changes)
    return TraceHeader(**data)


def test_canonical_json():
    assert canonical_json({"b": 1, "a": [0.1, np.float64(2.5), np.int64(3)]}) == '{"a":[0.1,2.5,3],"b":1}'
    assert canonical_json({"x": 1e-7}) == '{"x":1e-07}'
    with pytest.raises(ValueError):
        canonical_json({"x": math.nan})
    assert jsonl_bytes([{"a": 1}, {"b": 2}]) == b'{"a":1}\n{"b":2}\n'


def test_digest_covers_header_and_body():
    body = b'{"tick":0}\n'
    base = digest_bytes(header().line(), body)
    assert len(base) == 64
    assert digest_bytes(header().line(), body) == base
    assert digest_bytes(header(seed=8).line(), body) != base
    assert digest_bytes(header().line(), b'{"tick":1}\n') != base


def test_parse_channels():
    assert parse_channels(None) == ["lidar", "detections", "raster"]
    assert parse_channels("raster, lidar") == ["lidar", "raster"]
    with pytest.raises(ValueError):
        parse_channels("lidar,sonar")


def test_record_tick_must_be_contiguous(minimal_spec):
    world = init_world(minimal_spec, 0)
    obs = observe(world, minimal_spec, get_weather("clear-noon"))
    trace = Trace(header())
    with pytest.raises(TraceConsistencyError):
        record_tick(trace, replace(world, tick=1), obs, STRAIGHT, None, [])
    record_tick(trace, world, obs, STRAIGHT, None, [], terminal={"reason": "goal"})
    with pytest.raises(TraceConsistencyError):
        record_tick(trace, replace(world, tick=1), obs, STRAIGHT, None, [])


def test_record_drops_unrecorded_channels(minimal_spec):
    world = init_world(minimal_spec, 0)
    obs = observe(world, minimal_spec, get_weather("clear-noon"))
    trace = Trace(header(channels=["detections"]))
    record_tick(trace, world, obs, STRAIGHT, None, [])
    observation = trace.records[0]["observation"]
    assert "lidar" not in observation
    assert "detections" in observation
    assert "raster_sha256" not in trace.records[0]


def test_short_run_trace(short_run):
    records = short_run.trace.records
    assert [r["tick"] for r in records] == list(range(len(records)))
    assert records[-1]["terminal"] == {"reason": "goal"}
    assert all(r["terminal"] is None for r in records[:-1])
    assert all("raster_sha256" in r for r in records)
    assert set(short_run.trace.rasters) == set(range(len(records)))
    assert short_run.trace_hash == trace_hash(short_run.trace)
    fired = [e for r in records for e in r["events"] if e["kind"] == "TriggerFired"]
    assert [e["tick"] for e in fired] == [20]
    assert fired[0] in records[19]["events"]


def test_first_divergence():
    a = [{"tick": 0, "x": 1.0}, {"tick": 1, "x": 2.0}]
    assert first_divergence(a, [dict(r) for r in a]) is None
    assert first_divergence(a, [a[0], {"tick": 1, "x": 2.5}]) == 1
    assert first_divergence(a, a[:1]) == 1


def test_full_jsonl_export(short_run, tmp_path):
    (path,) = export_trace(short_run.trace, ExportFormat.FULL_JSONL, tmp_path)
    assert path.read_bytes() == short_run.trace.body()
    assert read_full_jsonl(path) == short_run.trace.records


def test_flat_csv_export(short_run, tmp_path):
    (path,) = export_trace(short_run.trace, ExportFormat.FLAT_CSV, tmp_path / "csv")
    frame = pd.read_csv(path, keep_default_na=False)
    assert tuple(frame.columns) == FLAT_CSV_COLUMNS
    assert len(frame) == len(short_run.trace)
    assert frame["tick"].tolist() == list(range(len(frame)))
    assert frame["terminal"].iloc[-1] == "goal"
    assert frame["collision"].sum() == 0
    assert frame["trigger_fired"].sum() == 1
    assert set(frame["action"]) <= {"Straight", "Stop"}


def test_raster_pack_round_trip(short_run, tmp_path):
    bin_path, idx_path = export_trace(short_run.trace, ExportFormat.RASTER_PACK, tmp_path)
    lines = idx_path.read_text().splitlines()
    assert lines[0] == "0 0 1024"
    assert lines[1] == "1 1028 1024"
    assert bin_path.stat().st_size == len(lines) * (4 + 1024)
    rasters = read_raster_pack(bin_path, idx_path)
    assert set(rasters) == set(short_run.trace.rasters)
    assert np.array_equal(rasters[5], short_run.trace.rasters[5])


def test_raster_pack_corruption(short_run, tmp_path):
    bin_path, idx_path = export_trace(short_run.trace, ExportFormat.RASTER_PACK, tmp_path)
    data = bin_path.read_bytes()
    bin_path.write_bytes(data[:-10])
    with pytest.raises(IntegrityError):
        read_raster_pack(bin_path, idx_path)
    bin_path.write_bytes(data)
    idx_path.write_text("0 0 1000\n")
    with pytest.raises(IntegrityError):
        read_raster_pack(bin_path, idx_path)
    idx_path.write_text("zero 0 1024\n")
    with pytest.raises(IntegrityError):
        read_raster_pack(bin_path, idx_path)


def test_raster_pack_needs_rasters(tmp_path):
    with pytest.raises(ConfigurationError):
        write_raster_pack(Trace(header()), tmp_path / "r.bin", tmp_path / "r.idx")


def _manifest(short_run, **changes):
    data = dict(
        engine_version=ENGINE_VERSION, scenario_id="straight-road", seed=7, policy="builtin:emergency_brake",
        channels=["lidar", "detections", "raster"], dt=0.05, trace_hash=short_run.trace_hash,
        result=short_run.result, trace_header=short_run.trace.header.model_dump(mode="json"),
        scenario_text="schema_version: 1\n",
    )
    data.update(changes)
    return RunManifest(**data)


def test_manifest_round_trip(short_run, tmp_path):
    manifest = _manifest(short_run)
    path = write_manifest(manifest, tmp_path / "manifest.json")
    assert read_manifest(path) == manifest
    assert read_manifest(tmp_path) == manifest
    assert json.loads(path.read_text())["result"]["outcome"] == "success"


def test_manifest_version_and_integrity(short_run, tmp_path):
    with pytest.raises(EngineVersionError):
        check_engine_version(_manifest(short_run, engine_version="2.0.0"))
    check_engine_version(_manifest(short_run, engine_version="1.9.3"))

    path = tmp_path / "manifest.json"
    data = _manifest(short_run).model_dump(mode="json")
    data["engine_version"] = "7.0.0"
    path.write_text(json.dumps(data))
    with pytest.raises(EngineVersionError):
        read_manifest(path)

    path.write_text("{not json")
    with pytest.raises(IntegrityError):
        read_manifest(path)
    with pytest.raises(IntegrityError):
        read_manifest(tmp_path / "missing.json")
    with pytest.raises(Exception):
        _manifest(short_run, trace_hash="abc")


def hashed_run(spec, seed, config, policy="constant_speed"):
    run_header = TraceHeader(engine_version=ENGINE_VERSION, scenario_id=spec.id, seed=seed,
                             policy=f"builtin:{policy}", dt=config.dt, channels=list(config.channels))
    return simulate(spec, seed, BuiltinPolicy(policy), run_header, config)


@pytest.mark.parametrize("scenario_id", [
    "luggage-fall", "stop-sign-ad", "ball-evidence-child", "police-car-chase", "erratic-biker",
])
def test_trace_hash_repeats_per_seed(catalog, fast_config, scenario_id):
    spec = catalog.get(scenario_id)
    for seed in (1, 2, 3):
        first = hashed_run(spec, seed, fast_config)
        again = hashed_run(spec, seed, fast_config)
        assert first.trace_hash == again.trace_hash
        assert first.trace.body() == again.trace.body()


def test_seed_changes_trace_under_traffic(minimal_spec, fast_config):
    spec = minimal_spec.model_copy(update={"traffic_density": TrafficDensity.LOW})
    one, two = hashed_run(spec, 1, fast_config), hashed_run(spec, 2, fast_config)
    assert any(info.background for info in one.world.actor_info.values())
    assert one.trace_hash != two.trace_hash
    assert one.trace.body() != two.trace.body()


def test_weather_changes_trace(minimal_spec, fast_config):
    clear = hashed_run(minimal_spec, 1, fast_config)
    fog = hashed_run(minimal_spec.model_copy(update={"weather": "fog-morning"}), 1, fast_config)
    assert clear.trace.header == fog.trace.header
    assert clear.trace_hash != fog.trace_hash
    assert clear.trace.records[0]["observation"]["lidar"] != fog.trace.records[0]["observation"]["lidar"]
