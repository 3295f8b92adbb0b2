# dataset_io/trace.py
"""
Per-tick trace of a run.

Record k holds the state, observation and action at tick k together with
the events produced by the step from k to k+1. The last record carries the
terminal reason. Rasters are kept beside the records; each record names its
raster by SHA-256 so the trace digest covers them.
"""

from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from dataset_io.hashing import canonical_json, digest_bytes, jsonl_bytes, sha256_hex
from perception.observation import Observation
from policy_harness.actions import EgoAction
from scenario_model.errors import TraceConsistencyError
from world_engine.kinematics import ContinuousControl
from world_engine.state import WorldEvent, WorldState

TRACE_SCHEMA_VERSION = 1
CHANNELS = ("lidar", "detections", "raster")


class TraceHeader(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = TRACE_SCHEMA_VERSION
    engine_version: str
    scenario_id: str
    seed: int
    overrides: Dict[str, Any] = Field(default_factory=dict)
    policy: str
    dt: float
    channels: List[str] = Field(default_factory=lambda: list(CHANNELS))
    perception: Dict[str, Any] = Field(default_factory=dict)

    def line(self) -> str:
        return canonical_json(self.model_dump(mode="json"))


def parse_channels(text: Optional[str]) -> List[str]:
    """Comma list of record channels, returned in canonical order"""
    if text is None or text.strip() == "":
        return list(CHANNELS)
    wanted = {part.strip() for part in text.split(",") if part.strip()}
    unknown = wanted - set(CHANNELS)
    if unknown:
        raise ValueError(f"unknown record channel(s): {', '.join(sorted(unknown))}")
    return [c for c in CHANNELS if c in wanted]


class Trace:
    def __init__(self, header: TraceHeader):
        self.header = header
        self.records: List[Dict[str, Any]] = []
        self.rasters: Dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.records)

    @property
    def terminal(self) -> Optional[Dict[str, Any]]:
        return self.records[-1].get("terminal") if self.records else None

    def body(self) -> bytes:
        return jsonl_bytes(self.records)

    def digest(self) -> str:
        return trace_hash(self)


def observation_record(observation: Observation, channels: Sequence[str]) -> Dict[str, Any]:
    data = observation.to_wire()
    if "lidar" not in channels:
        data.pop("lidar")
    if "detections" not in channels:
        data.pop("detections")
    return data


def record_tick(trace: Trace, world: WorldState, observation: Observation, action: Optional[EgoAction],
                control: Optional[ContinuousControl], events: Iterable[WorldEvent],
                raster: Optional[np.ndarray] = None, terminal: Optional[Dict[str, Any]] = None) -> Trace:
    """Append the record for world.tick; the trace must be contiguous from 0"""
    expected = len(trace.records)
    if world.tick != expected:
        raise TraceConsistencyError(f"trace expected tick {expected}, got {world.tick}")
    if trace.terminal is not None:
        raise TraceConsistencyError(f"trace already terminated before tick {world.tick}")

    record: Dict[str, Any] = {
        "tick": world.tick,
        "sim_time": world.sim_time,
        "ego": world.ego.to_dict(),
        "actors": {actor_id: world.actor_states[actor_id].to_dict() for actor_id in sorted(world.actor_states)},
        "observation": observation_record(observation, trace.header.channels),
        "action": action.to_wire() if action is not None else None,
        "control": control.to_dict() if control is not None else None,
        "events": [e.to_dict() for e in events],
        "terminal": terminal,
    }
    if raster is not None:
        data = np.ascontiguousarray(raster, dtype=np.uint8)
        record["raster_sha256"] = sha256_hex(data.tobytes())
        trace.rasters[world.tick] = data
    trace.records.append(record)
    return trace


def trace_hash(trace: Trace) -> str:
    return digest_bytes(trace.header.line(), trace.body())


def first_divergence(expected: Sequence[Dict[str, Any]], actual: Sequence[Dict[str, Any]]) -> Optional[int]:
    """Index of the first record whose canonical text differs, None when identical"""
    for i, (a, b) in enumerate(zip(expected, actual)):
        if canonical_json(a) != canonical_json(b):
            return i
    if len(expected) != len(actual):
        return min(len(expected), len(actual))
    return None
