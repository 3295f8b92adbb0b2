# world_engine/traffic.py
"""
Background traffic. Vehicles spawn at the map's traffic_* anchors, chosen from
the seeded traffic stream, and follow the rest of their lane blindly.
"""

import logging
import math
from typing import List, Sequence, Tuple

from scenario_model.roadmap import lane_travel_points, project_onto_lane, wrap_angle
from scenario_model.types import (
    ActorClass,
    BehaviorKind,
    BehaviorScript,
    DENSITY_VEHICLE_COUNT,
    Lane,
    Pose2D,
    ScenarioSpec,
    Waypoint,
)
from world_engine.behaviors import spawn_actor
from world_engine.geometry import OrientedBox, obb_overlap
from world_engine.rng import TRAFFIC_STREAM, RngStreams
from world_engine.state import ActorInfo, ActorRuntime, KinematicState

logger = logging.getLogger(__name__)

TRAFFIC_PREFIX = "traffic_"
BACKGROUND_PREFIX = "bg-"
BACKGROUND_LENGTH = 4.5
BACKGROUND_WIDTH = 1.9
EGO_CLEARANCE = 25.0
SPEED_FACTOR_RANGE = (0.6, 0.9)

Spawned = Tuple[ActorInfo, KinematicState, ActorRuntime]


def _lane_for(spec: ScenarioSpec, pose: Pose2D) -> Lane:
    """Nearest lane whose travel direction matches the anchor heading"""
    best, best_dist = None, math.inf
    for lane in spec.map.lanes:
        proj = project_onto_lane(lane_travel_points(lane), pose.x, pose.y)
        if abs(wrap_angle(proj.heading - pose.heading)) > 0.5 * math.pi:
            continue
        if proj.distance < best_dist:
            best, best_dist = lane, proj.distance
    return best


def _behind_ego(pose: Pose2D, ego: KinematicState) -> bool:
    """Anchor sits behind the ego in the ego's own lane"""
    if math.cos(wrap_angle(pose.heading - ego.heading)) < 0.7:
        return False
    dx, dy = pose.x - ego.x, pose.y - ego.y
    along = dx * math.cos(ego.heading) + dy * math.sin(ego.heading)
    across = -dx * math.sin(ego.heading) + dy * math.cos(ego.heading)
    return along < 0.0 and abs(across) < 1.0


def eligible_anchors(spec: ScenarioSpec, ego: KinematicState, occupied: Sequence[OrientedBox]) -> List[str]:
    names = []
    for name in sorted(spec.map.spawn_anchors):
        if not name.startswith(TRAFFIC_PREFIX):
            continue
        pose = spec.map.spawn_anchors[name]
        if math.hypot(pose.x - ego.x, pose.y - ego.y) < EGO_CLEARANCE:
            continue
        if _behind_ego(pose, ego):
            continue
        box = OrientedBox.from_pose(pose.x, pose.y, pose.heading, BACKGROUND_LENGTH, BACKGROUND_WIDTH)
        if any(obb_overlap(box, other) for other in occupied):
            continue
        if _lane_for(spec, pose) is None:
            continue
        names.append(name)
    return names


def spawn_background(spec: ScenarioSpec, ego: KinematicState, occupied: Sequence[OrientedBox],
                     streams: RngStreams) -> Tuple[List[Spawned], RngStreams]:
    """Background vehicles plus the stream state after the traffic draws"""
    count = DENSITY_VEHICLE_COUNT[spec.traffic_density]
    if count == 0:
        return [], streams

    names = eligible_anchors(spec, ego, occupied)
    if len(names) < count:
        logger.warning(
            f"[!] {spec.id}: only {len(names)} traffic anchors available for {count} background vehicles"
        )
    n = min(count, len(names))
    if n == 0:
        return [], streams

    rng = streams.generator(TRAFFIC_STREAM)
    picks = rng.choice(len(names), size=n, replace=False)
    factors = rng.uniform(SPEED_FACTOR_RANGE[0], SPEED_FACTOR_RANGE[1], size=n)

    spawned: List[Spawned] = []
    for k, (pick, factor) in enumerate(zip(picks.tolist(), factors.tolist())):
        pose = spec.map.spawn_anchors[names[pick]]
        lane = _lane_for(spec, pose)
        speed = lane.speed_limit * factor
        end_x, end_y = lane_travel_points(lane)[-1]
        behavior = BehaviorScript(
            kind=BehaviorKind.WAYPOINT_FOLLOW,
            waypoints=(
                Waypoint(x=pose.x, y=pose.y, speed=speed),
                Waypoint(x=float(end_x), y=float(end_y), speed=speed),
            ),
            parameters={"initial_speed": speed},
        )
        info = ActorInfo(
            id=f"{BACKGROUND_PREFIX}{k:02d}",
            true_class=ActorClass.CAR,
            apparent_class=ActorClass.CAR,
            length=BACKGROUND_LENGTH,
            width=BACKGROUND_WIDTH,
            background=True,
        )
        state, runtime = spawn_actor(info, pose, behavior)
        spawned.append((info, state, runtime))
    return spawned, streams.advanced(TRAFFIC_STREAM, rng)
