# dataset_io/manifest.py
"""
manifest.json: everything needed to identify and replay a run. Only
created_at is wall-clock; it is never part of the trace digest.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from evaluation.scoring import RunResult
from scenario_model.errors import EngineVersionError, IntegrityError
from world_engine.engine import ENGINE_VERSION

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
MANIFEST_SCHEMA_VERSION = 1


class RunManifest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = MANIFEST_SCHEMA_VERSION
    engine_version: str
    scenario_id: str
    seed: int
    overrides: Dict[str, Any] = Field(default_factory=dict)
    policy: str
    channels: List[str]
    dt: float
    perception: Dict[str, Any] = Field(default_factory=dict)
    trace_hash: str = Field(pattern=r"^[0-9a-f]{64}$")
    result: RunResult
    trace_header: Dict[str, Any]
    scenario_text: str
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))


def major(version: str) -> str:
    return version.split(".", 1)[0]


def check_engine_version(manifest: RunManifest, engine_version: str = ENGINE_VERSION) -> None:
    if major(manifest.engine_version) != major(engine_version):
        raise EngineVersionError(
            f"manifest was written by engine {manifest.engine_version}; "
            f"this engine is {engine_version} and replays major version {major(engine_version)} only"
        )


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    path = Path(path)
    text = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def read_manifest(path: Path) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_FILE
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IntegrityError(f"no manifest at {path}") from None
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IntegrityError(f"unreadable manifest {path}: {e}") from None
    if isinstance(data, dict) and "engine_version" in data and isinstance(data["engine_version"], str):
        if major(data["engine_version"]) != major(ENGINE_VERSION):
            raise EngineVersionError(
                f"manifest was written by engine {data['engine_version']}; this engine is {ENGINE_VERSION}"
            )
    try:
        return RunManifest.model_validate(data)
    except ValidationError as e:
        raise IntegrityError(f"invalid manifest {path}: {e.error_count()} problem(s)") from None
