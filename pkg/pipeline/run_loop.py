# pipeline/run_loop.py
"""
The single-run loop and the run directory it produces.

Each tick: observe, optionally rasterize, ask the policy, map the action to
a control, step the world, update metrics and termination, record the tick.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from dataset_io.export import (
    CSV_FILE,
    RASTER_FILE,
    RASTER_INDEX_FILE,
    TRACE_FILE,
    write_flat_csv,
    write_full_jsonl,
    write_raster_pack,
)
from dataset_io.manifest import MANIFEST_FILE, RunManifest, write_manifest
from dataset_io.trace import CHANNELS, Trace, TraceHeader, record_tick, trace_hash
from evaluation.metrics import MetricsTracker
from evaluation.scoring import RunResult, score_run
from evaluation.termination import TerminalReason, update_evaluation
from perception.observation import PerceptionConfig, observe, occupancy_for
from policy_harness.binding import Policy, PolicyBinding, create_policy
from policy_harness.discrete import DiscreteMapper
from scenario_dsl.catalog import Catalog, load_catalog
from scenario_dsl.parser import parse_scenario_file
from scenario_dsl.serializer import serialize_scenario
from scenario_model.errors import CatalogError, ConfigurationError, PolicyFault
from scenario_model.overrides import Overrides, apply_overrides
from scenario_model.roadmap import drivable_paths
from scenario_model.types import ScenarioSpec
from scenario_model.weather import get_weather
from world_engine.engine import DEFAULT_DT, ENGINE_VERSION, init_world, step
from world_engine.state import EventKind, WorldEvent, WorldState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    dt: float = DEFAULT_DT
    perception: PerceptionConfig = PerceptionConfig()
    channels: Tuple[str, ...] = CHANNELS

    def perception_dict(self) -> Dict[str, Any]:
        p = self.perception
        return {
            "lidar_rays": p.lidar_rays,
            "lidar_max_range": p.lidar_max_range,
            "raster_cells": p.raster_cells,
            "raster_resolution": p.raster_resolution,
        }


@dataclass
class SimulationOutput:
    trace: Trace
    result: RunResult
    world: WorldState
    trace_hash: str = ""


def _policy_events(world: WorldState, substitution: Optional[str], action_label: str,
                   warning: Optional[str]) -> List[WorldEvent]:
    events = []
    if substitution is not None:
        events.append(WorldEvent(world.tick, EventKind.PROTOCOL_SUBSTITUTION, {"reason": substitution}))
    if warning is not None:
        events.append(WorldEvent(world.tick, EventKind.POLICY_WARNING, {"action": action_label, "message": warning}))
    return events


def simulate(spec: ScenarioSpec, seed: int, policy: Policy, header: TraceHeader,
             config: RunConfig = RunConfig()) -> SimulationOutput:
    """
    Run spec (overrides already applied) to its terminal state with policy.
    The policy must already be started; it is not closed here.
    """
    weather = get_weather(spec.weather)
    world = init_world(spec, seed, config.dt)
    drivable = drivable_paths(spec.map) if "raster" in config.channels else []
    mapper = DiscreteMapper(spec.map)
    tracker = MetricsTracker(spec)
    tracker.update(world)
    trace = Trace(header)

    while True:
        observation = observe(world, spec, weather, config.perception)
        raster = occupancy_for(world, weather, drivable, config.perception) if "raster" in config.channels else None

        try:
            decision = policy.act(observation)
        except PolicyFault as e:
            logger.warning("[!] Policy fault at tick %s: %s", world.tick, e)
            record_tick(trace, world, observation, None, None, [], raster,
                        terminal={"reason": TerminalReason.POLICY_FAULT.value, "detail": str(e)})
            reason = TerminalReason.POLICY_FAULT
            break

        control, warning = mapper.resolve(decision.action, world.ego)
        pending = _policy_events(world, decision.substitution, decision.action.label, warning)
        next_world, events = step(world, control, spec, weather, pending)
        tracker.update(next_world)
        reason = update_evaluation(next_world, events, spec)
        record_tick(trace, world, observation, decision.action, control, events, raster,
                    terminal={"reason": reason.value} if reason is not None else None)
        world = next_world
        if reason is not None:
            break

    result = score_run(world.event_log, spec.constraints, reason, tracker.result())
    logger.info("[+] %s seed %s: %s after %s ticks (severity %.2f)",
                spec.id, seed, result.outcome.value, len(trace), result.severity_score)
    return SimulationOutput(trace=trace, result=result, world=world, trace_hash=trace_hash(trace))


# scenario resolution

def resolve_scenario(reference: Union[str, Path], catalog_dir: Path) -> ScenarioSpec:
    """A path to a .3cs file, or a catalog id"""
    path = Path(reference)
    if path.suffix == ".3cs" or path.is_file():
        if not path.is_file():
            raise ConfigurationError(f"scenario file not found: {path}")
        return parse_scenario_file(path)
    catalog = load_catalog(catalog_dir, strict=False)
    return catalog.get(str(reference))


def load_catalog_or_fail(catalog_dir: Path) -> Catalog:
    if not Path(catalog_dir).is_dir():
        raise CatalogError(f"catalog directory not found: {catalog_dir}")
    return load_catalog(catalog_dir)


# run directory

@dataclass
class RunArtifacts:
    directory: Path
    manifest: RunManifest
    output: SimulationOutput
    files: List[Path] = field(default_factory=list)


def write_run_directory(out_dir: Path, output: SimulationOutput, base_spec: ScenarioSpec,
                        seed: int, overrides: Overrides, binding_descriptor: str,
                        config: RunConfig) -> RunArtifacts:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        files = [write_full_jsonl(output.trace, out_dir / TRACE_FILE),
                 write_flat_csv(output.trace, out_dir / CSV_FILE)]
        if "raster" in config.channels:
            files.extend(write_raster_pack(output.trace, out_dir / RASTER_FILE, out_dir / RASTER_INDEX_FILE))
        manifest = RunManifest(
            engine_version=ENGINE_VERSION,
            scenario_id=base_spec.id,
            seed=seed,
            overrides=overrides.to_dict(),
            policy=binding_descriptor,
            channels=list(config.channels),
            dt=config.dt,
            perception=config.perception_dict(),
            trace_hash=output.trace_hash,
            result=output.result,
            trace_header=output.trace.header.model_dump(mode="json"),
            scenario_text=serialize_scenario(base_spec),
        )
        files.append(write_manifest(manifest, out_dir / MANIFEST_FILE))
    except OSError as e:
        raise ConfigurationError(f"cannot write run directory {out_dir}: {e}") from None
    return RunArtifacts(directory=out_dir, manifest=manifest, output=output, files=files)


def execute_run(base_spec: ScenarioSpec, binding: PolicyBinding, out_dir: Path,
                seed: Optional[int] = None, overrides: Optional[Overrides] = None,
                config: RunConfig = RunConfig()) -> RunArtifacts:
    """Apply overrides, run with a fresh policy and write the run directory"""
    overrides = overrides or Overrides()
    spec = apply_overrides(base_spec, overrides)
    seed = seed if seed is not None else spec.default_seed
    header = TraceHeader(
        engine_version=ENGINE_VERSION,
        scenario_id=base_spec.id,
        seed=seed,
        overrides=overrides.to_dict(),
        policy=binding.descriptor,
        dt=config.dt,
        channels=list(config.channels),
        perception=config.perception_dict(),
    )
    policy = create_policy(binding)
    policy.start(config.perception.lidar_rays, ENGINE_VERSION)
    output = None
    try:
        output = simulate(spec, seed, policy, header, config)
    finally:
        if output is not None:
            policy.close(output.trace.terminal["reason"], len(output.trace))
        else:
            policy.close("aborted")
    return write_run_directory(out_dir, output, base_spec, seed, overrides, binding.descriptor, config)


def run_config(dt: float, perception: PerceptionConfig, channels: Sequence[str]) -> RunConfig:
    return RunConfig(dt=dt, perception=perception, channels=tuple(c for c in CHANNELS if c in channels))
