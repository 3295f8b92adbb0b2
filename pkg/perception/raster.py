# perception/raster.py
"""
Ego-centred top-down occupancy raster, the grid-shaped perception channel of
exported datasets. Row 0 is farthest ahead, column 0 farthest to the left and
the ego sits at cell (cells // 2, cells // 2).
"""

import math
from enum import IntEnum
from typing import Iterable, Optional, Sequence

import numpy as np
from matplotlib.path import Path

from scenario_model.roadmap import points_on_drivable
from scenario_model.types import (
    ActorClass,
    PROP_CLASSES,
    TRAFFIC_CONTROL_CLASSES,
    VEHICLE_CLASSES,
)
from scenario_model.weather import WeatherPreset
from world_engine.state import WorldState

DEFAULT_CELLS = 128
DEFAULT_RESOLUTION = 0.5


class CellCode(IntEnum):
    FREE = 0
    ROAD = 1
    UNKNOWN = 2
    VEHICLE = 3
    VULNERABLE = 4
    PROP = 5
    TRAFFIC_CONTROL = 6


def class_code(apparent: ActorClass) -> CellCode:
    if apparent in VEHICLE_CLASSES:
        return CellCode.VEHICLE
    if apparent in TRAFFIC_CONTROL_CLASSES:
        return CellCode.TRAFFIC_CONTROL
    if apparent in PROP_CLASSES or apparent == ActorClass.CAR_DOOR:
        return CellCode.PROP
    return CellCode.VULNERABLE


def cell_offsets(cells: int = DEFAULT_CELLS, resolution: float = DEFAULT_RESOLUTION):
    """Ego-frame (forward, left) coordinates of every cell centre, each (cells, cells)"""
    center = cells // 2
    idx = np.arange(cells, dtype=float)
    forward = (center - idx)[:, None] * resolution
    left = (center - idx)[None, :] * resolution
    return np.broadcast_to(forward, (cells, cells)), np.broadcast_to(left, (cells, cells))


def cell_of(forward: float, left: float, cells: int = DEFAULT_CELLS,
            resolution: float = DEFAULT_RESOLUTION) -> Optional[tuple]:
    center = cells // 2
    row = center - int(math.floor(forward / resolution + 0.5))
    col = center - int(math.floor(left / resolution + 0.5))
    if 0 <= row < cells and 0 <= col < cells:
        return row, col
    return None


def render_occupancy(world: WorldState, weather: WeatherPreset, visible_ids: Iterable[str],
                     drivable: Sequence[Path], cells: int = DEFAULT_CELLS,
                     resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    """
    Rasterize the map and the visible actors. visible_ids must come from the
    same tick's detection pass so occluded actors stay off the grid.
    """
    ego = world.ego
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    forward, left = cell_offsets(cells, resolution)
    wx = ego.x + c * forward - s * left
    wy = ego.y + s * forward + c * left
    points = np.stack([wx.ravel(), wy.ravel()], axis=1)

    grid = np.where(points_on_drivable(drivable, points), CellCode.ROAD, CellCode.FREE).astype(np.uint8)
    grid = grid.reshape(cells, cells)
    grid[np.hypot(forward, left) > weather.visibility_range] = CellCode.UNKNOWN

    for actor_id in sorted(visible_ids):
        box = world.box(actor_id)
        code = class_code(world.actor_info[actor_id].apparent_class)
        inside = box.contains_points(points).reshape(cells, cells)
        grid[inside] = code
        st = world.actor_states[actor_id]
        dx, dy = st.x - ego.x, st.y - ego.y
        centre_cell = cell_of(c * dx + s * dy, -s * dx + c * dy, cells, resolution)
        if centre_cell is not None:
            grid[centre_cell] = code
    return grid
