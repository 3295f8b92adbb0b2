# perception/observation.py
"""
The per-tick Observation handed to policies. It is built only from
perception outputs and ego state; no true-class channel exists in it.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from matplotlib.path import Path
from pydantic import BaseModel, ConfigDict

from perception.detection import Detection, detect_entities, visible_actor_ids
from perception.lidar import DEFAULT_MAX_RANGE, DEFAULT_RAYS, lidar_cap, sense_lidar
from perception.raster import DEFAULT_CELLS, DEFAULT_RESOLUTION, render_occupancy
from scenario_model.roadmap import wrap_angle
from scenario_model.types import ScenarioSpec
from scenario_model.weather import WeatherPreset
from world_engine.rng import LIDAR_STREAM
from world_engine.state import WorldState


class EgoObservation(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    x: float
    y: float
    heading: float
    speed: float
    steer: float


class GoalObservation(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bearing: float
    distance: float


class Observation(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    tick: int
    sim_time: float
    ego: EgoObservation
    lidar: Tuple[float, ...]
    lidar_max_range: float
    detections: Tuple[Detection, ...]
    weather_id: str
    goal: GoalObservation

    def to_wire(self) -> dict:
        return self.model_dump(mode="json")


@dataclass(frozen=True)
class PerceptionConfig:
    lidar_rays: int = DEFAULT_RAYS
    lidar_max_range: float = DEFAULT_MAX_RANGE
    raster_cells: int = DEFAULT_CELLS
    raster_resolution: float = DEFAULT_RESOLUTION


def goal_observation(world: WorldState, spec: ScenarioSpec) -> GoalObservation:
    gx, gy = spec.goal_region.center
    dx, dy = gx - world.ego.x, gy - world.ego.y
    return GoalObservation(
        bearing=wrap_angle(math.atan2(dy, dx) - world.ego.heading),
        distance=math.hypot(dx, dy),
    )


def observe(world: WorldState, spec: ScenarioSpec, weather: WeatherPreset,
            config: PerceptionConfig = PerceptionConfig()) -> Observation:
    """Sense the world at the current tick. Pure: the lidar noise comes from the tick's own stream"""
    lidar = sense_lidar(world, weather, world.rng_state.tick_stream(LIDAR_STREAM, world.tick),
                        rays=config.lidar_rays, max_range=config.lidar_max_range)
    ego = world.ego
    return Observation(
        tick=world.tick,
        sim_time=world.sim_time,
        ego=EgoObservation(x=ego.x, y=ego.y, heading=ego.heading, speed=ego.speed, steer=ego.steer),
        lidar=tuple(lidar.tolist()),
        lidar_max_range=lidar_cap(weather, config.lidar_max_range),
        detections=tuple(detect_entities(world, weather)),
        weather_id=weather.id,
        goal=goal_observation(world, spec),
    )


def occupancy_for(world: WorldState, weather: WeatherPreset, drivable: Sequence[Path],
                  config: PerceptionConfig = PerceptionConfig()) -> np.ndarray:
    visible = [actor_id for _, actor_id in visible_actor_ids(world, weather)]
    return render_occupancy(world, weather, visible, drivable,
                            cells=config.raster_cells, resolution=config.raster_resolution)
