# dataset_io/replay.py
"""
Bit-exact replay of a recorded run directory.

Order of checks: engine version, trace digest on the raw bytes, raster
digests, then a re-simulation fed with the recorded actions whose records
must match the originals one by one.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from dataset_io.export import RASTER_FILE, RASTER_INDEX_FILE, TRACE_FILE, parse_jsonl, read_raster_pack
from dataset_io.hashing import digest_bytes, sha256_hex
from dataset_io.manifest import MANIFEST_FILE, RunManifest, check_engine_version, read_manifest
from dataset_io.trace import Trace, TraceHeader, first_divergence
from evaluation.scoring import RunResult
from perception.observation import PerceptionConfig
from policy_harness.binding import ReplayPolicy
from scenario_dsl.parser import parse_scenario
from scenario_model.errors import IntegrityError, ReplayDivergenceError
from scenario_model.overrides import apply_overrides

logger = logging.getLogger(__name__)


@dataclass
class ReplayReport:
    manifest: RunManifest
    result: RunResult
    trace_hash: str
    ticks: int


def _run_dir(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path if path.is_dir() else path.parent


def verify_trace_bytes(manifest: RunManifest, body: bytes) -> None:
    header_line = TraceHeader.model_validate(manifest.trace_header).line()
    actual = digest_bytes(header_line, body)
    if actual != manifest.trace_hash:
        raise IntegrityError(f"trace digest {actual[:12]}... does not match manifest {manifest.trace_hash[:12]}...")


def verify_rasters(records: List[Dict], rasters: Dict[int, np.ndarray]) -> None:
    for record in records:
        expected = record.get("raster_sha256")
        if expected is None:
            continue
        raster = rasters.get(record["tick"])
        if raster is None:
            raise IntegrityError(f"raster for tick {record['tick']} is missing from {RASTER_FILE}")
        if sha256_hex(np.ascontiguousarray(raster, dtype=np.uint8).tobytes()) != expected:
            raise IntegrityError(f"raster for tick {record['tick']} does not match its recorded digest")


def load_trace(path: Union[str, Path]) -> Trace:
    """Load and verify a run directory's trace (records plus rasters) against its manifest"""
    run_dir = _run_dir(path)
    manifest = read_manifest(run_dir / MANIFEST_FILE)
    check_engine_version(manifest)
    try:
        body = (run_dir / TRACE_FILE).read_bytes()
    except FileNotFoundError:
        raise IntegrityError(f"no {TRACE_FILE} in {run_dir}") from None
    verify_trace_bytes(manifest, body)
    trace = Trace(TraceHeader.model_validate(manifest.trace_header))
    trace.records = parse_jsonl(body)
    if any("raster_sha256" in r for r in trace.records):
        bin_path, idx_path = run_dir / RASTER_FILE, run_dir / RASTER_INDEX_FILE
        if not bin_path.exists() or not idx_path.exists():
            raise IntegrityError(f"trace references rasters but {RASTER_FILE}/{RASTER_INDEX_FILE} are missing")
        trace.rasters = read_raster_pack(bin_path, idx_path)
        verify_rasters(trace.records, trace.rasters)
    return trace


def replay(path: Union[str, Path]) -> ReplayReport:
    from pipeline.run_loop import RunConfig, simulate

    run_dir = _run_dir(path)
    manifest = read_manifest(run_dir / MANIFEST_FILE)
    check_engine_version(manifest)
    recorded = load_trace(run_dir)

    base_spec = parse_scenario(manifest.scenario_text, source=f"{run_dir / MANIFEST_FILE}:scenario_text")
    spec = apply_overrides(base_spec, manifest.overrides)
    config = RunConfig(
        dt=manifest.dt,
        perception=PerceptionConfig(**manifest.perception),
        channels=tuple(manifest.channels),
    )
    logger.info("[+] Replaying %s seed %s (%s ticks)", manifest.scenario_id, manifest.seed, len(recorded))
    output = simulate(spec, manifest.seed, ReplayPolicy(recorded.records), recorded.header, config)

    tick = first_divergence(recorded.records, output.trace.records)
    if tick is not None:
        raise ReplayDivergenceError(tick, "recorded and replayed tick records differ")
    if output.trace_hash != manifest.trace_hash:
        raise ReplayDivergenceError(len(output.trace), "trace digest differs")
    if output.result != manifest.result:
        raise ReplayDivergenceError(len(output.trace) - 1, "run result differs")
    return ReplayReport(manifest=manifest, result=output.result, trace_hash=output.trace_hash, ticks=len(output.trace))
