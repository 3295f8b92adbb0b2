# pipeline/settings.py
"""
Runtime configuration loaded from YAML.

Lookup order: explicit path, then $CORNERSIM_CONFIG, then
config/default.yaml next to the project. A missing file means built-in
defaults. $CORNERSIM_CATALOG replaces the catalog directory.
"""

import logging
import os
from pathlib import Path
from typing import List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from dataset_io.trace import CHANNELS
from perception.observation import PerceptionConfig
from scenario_model.errors import ConfigurationError
from world_engine.engine import DEFAULT_DT

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "default.yaml"
CONFIG_ENV = "CORNERSIM_CONFIG"
CATALOG_ENV = "CORNERSIM_CATALOG"


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class EngineSettings(_Section):
    dt: float = Field(DEFAULT_DT, gt=0, le=1.0)


class PerceptionSettings(_Section):
    lidar_rays: int = Field(72, ge=1, le=4096)
    lidar_max_range: float = Field(50.0, gt=0)
    raster_cells: int = Field(128, ge=8, le=1024)
    raster_resolution: float = Field(0.5, gt=0)

    def config(self) -> PerceptionConfig:
        return PerceptionConfig(
            lidar_rays=self.lidar_rays,
            lidar_max_range=self.lidar_max_range,
            raster_cells=self.raster_cells,
            raster_resolution=self.raster_resolution,
        )


class PolicySettings(_Section):
    handshake_timeout_s: float = Field(5.0, gt=0)
    tick_timeout_ms: int = Field(50, gt=0)
    max_consecutive_substitutions: int = Field(3, ge=1)


class OutputSettings(_Section):
    root: str = "runs"
    record: List[str] = Field(default_factory=lambda: list(CHANNELS))

    @field_validator("record")
    @classmethod
    def _known_channels(cls, value):
        unknown = [c for c in value if c not in CHANNELS]
        if unknown:
            raise ValueError(f"unknown record channel(s): {', '.join(unknown)}")
        return [c for c in CHANNELS if c in value]


class CatalogSettings(_Section):
    directory: str = "catalog"


class LoggingSettings(_Section):
    level: str = "WARNING"

    @field_validator("level")
    @classmethod
    def _known_level(cls, value):
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{value}'")
        return value


class Settings(_Section):
    engine: EngineSettings = EngineSettings()
    perception: PerceptionSettings = PerceptionSettings()
    policy: PolicySettings = PolicySettings()
    output: OutputSettings = OutputSettings()
    catalog: CatalogSettings = CatalogSettings()
    logging: LoggingSettings = LoggingSettings()

    def catalog_dir(self) -> Path:
        override = os.environ.get(CATALOG_ENV)
        directory = Path(override) if override else Path(self.catalog.directory)
        if not directory.is_absolute() and not override:
            directory = PROJECT_ROOT / directory
        return directory


def resolve_config_path(path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    if path is not None:
        candidate = Path(path)
        if not candidate.exists():
            raise ConfigurationError(f"config file not found: {candidate}")
        return candidate
    env = os.environ.get(CONFIG_ENV)
    if env:
        candidate = Path(env)
        if not candidate.exists():
            raise ConfigurationError(f"{CONFIG_ENV} points to a missing file: {candidate}")
        return candidate
    return DEFAULT_CONFIG_PATH if DEFAULT_CONFIG_PATH.exists() else None


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    config_path = resolve_config_path(path)
    if config_path is None:
        logger.debug("[+] No config file, using built-in defaults")
        return Settings()
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse {config_path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{config_path}: top level must be a mapping")
    try:
        settings = Settings.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(f"{config_path}: {where}: {first['msg']}") from None
    logger.debug("[+] Loaded settings from %s", config_path)
    return settings
