# perception/lidar.py
"""
Planar lidar: rays from the ego centre, counterclockwise from the ego heading,
against every active actor box.
"""

import math

import numpy as np

from scenario_model.weather import WeatherPreset
from world_engine.geometry import ray_box_distances
from world_engine.state import WorldState

DEFAULT_RAYS = 72
DEFAULT_MAX_RANGE = 50.0
MIN_RANGE = 0.01


def lidar_cap(weather: WeatherPreset, max_range: float = DEFAULT_MAX_RANGE) -> float:
    return min(max_range, weather.visibility_range)


def ray_directions(heading: float, rays: int = DEFAULT_RAYS) -> np.ndarray:
    angles = heading + 2.0 * math.pi * np.arange(rays) / rays
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def sense_lidar(world: WorldState, weather: WeatherPreset, stream: np.random.Generator,
                rays: int = DEFAULT_RAYS, max_range: float = DEFAULT_MAX_RANGE) -> np.ndarray:
    """
    Ranges in metres. Hits carry Gaussian noise and are clipped into
    [0.01, cap]; rays that hit nothing read the cap exactly. The stream
    advances by `rays` draws every call whatever the outcome.
    """
    cap = lidar_cap(weather, max_range)
    boxes = [world.box(i) for i in world.active_ids()]
    exact = ray_box_distances((world.ego.x, world.ego.y), ray_directions(world.ego.heading, rays), boxes)
    noise = stream.standard_normal(rays) * weather.lidar_noise_sigma
    hit = exact < cap
    return np.where(hit, np.clip(exact + noise, MIN_RANGE, cap), cap)
