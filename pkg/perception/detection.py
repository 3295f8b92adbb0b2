# perception/detection.py
"""
Entity detections as the ego perceives them: apparent classes only, opaque
ids, hard occlusion by other actor boxes along the centre line of sight.
"""

import math
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict

from scenario_model.roadmap import wrap_angle
from scenario_model.types import ActorClass
from scenario_model.weather import WeatherPreset
from world_engine.geometry import OrientedBox, segment_hits_any
from world_engine.state import WorldState


class Detection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    apparent_class: ActorClass
    x: float                  # ego frame, forward
    y: float                  # ego frame, left
    heading: float            # relative to ego heading
    length: float
    width: float
    relative_speed: float     # range rate, negative when closing


def opaque_ids(world: WorldState) -> Dict[str, str]:
    return {actor_id: f"obj-{i:03d}" for i, actor_id in enumerate(sorted(world.actor_info))}


def _occluded(world: WorldState, target: str, boxes: Dict[str, OrientedBox]) -> bool:
    s = world.actor_states[target]
    others = [box for actor_id, box in boxes.items() if actor_id != target]
    return segment_hits_any((world.ego.x, world.ego.y), (s.x, s.y), others)


def visible_actor_ids(world: WorldState, weather: WeatherPreset) -> List[Tuple[float, str]]:
    """(distance, actor id) for every actor the ego can see, nearest first"""
    active = world.active_ids()
    boxes = {actor_id: world.box(actor_id) for actor_id in active}
    out = []
    for actor_id in active:
        s = world.actor_states[actor_id]
        dist = math.hypot(s.x - world.ego.x, s.y - world.ego.y)
        if dist > weather.visibility_range:
            continue
        if _occluded(world, actor_id, boxes):
            continue
        out.append((dist, actor_id))
    out.sort()
    return out


def detect_entities(world: WorldState, weather: WeatherPreset) -> List[Detection]:
    ego = world.ego
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    evx, evy = ego.speed * c, ego.speed * s
    ids = opaque_ids(world)
    detections = []
    for dist, actor_id in visible_actor_ids(world, weather):
        st = world.actor_states[actor_id]
        info = world.actor_info[actor_id]
        dx, dy = st.x - ego.x, st.y - ego.y
        rvx = st.speed * math.cos(st.heading) - evx
        rvy = st.speed * math.sin(st.heading) - evy
        range_rate = (dx * rvx + dy * rvy) / dist if dist > 1e-9 else 0.0
        detections.append(Detection(
            id=ids[actor_id],
            apparent_class=info.apparent_class,
            x=c * dx + s * dy,
            y=-s * dx + c * dy,
            heading=wrap_angle(st.heading - ego.heading),
            length=info.length,
            width=info.width,
            relative_speed=range_rate,
        ))
    return detections
