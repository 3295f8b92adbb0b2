# policy_harness/builtin_policies.py
"""
Baseline policies shipped with the harness. They only read the Observation,
never the world, and are deterministic.
"""

import math
from typing import Callable, Dict

import numpy as np

from perception.detection import Detection
from perception.observation import Observation
from policy_harness.actions import STOP, STRAIGHT, DiscreteAction, EgoAction
from scenario_model.errors import ConfigurationError
from world_engine.kinematics import GRAVITY
from world_engine.state import EGO_LENGTH, EGO_WIDTH

ASSUMED_FRICTION = 0.7
SAFETY_MARGIN = 2.0
LATERAL_MARGIN = 0.5
TURN_BEARING = 0.6
TURN_DISTANCE = 40.0

FRONT_OFFSET = EGO_LENGTH / 2
PATH_HALF_WIDTH = EGO_WIDTH / 2 + LATERAL_MARGIN


def braking_distance(speed: float, friction: float = ASSUMED_FRICTION) -> float:
    return speed * speed / (2.0 * friction * GRAVITY) + SAFETY_MARGIN


def _detection_gap(det: Detection) -> float:
    """Bumper-to-face distance of an in-path detection, inf when outside the path"""
    c, s = abs(math.cos(det.heading)), abs(math.sin(det.heading))
    half_forward = c * det.length / 2 + s * det.width / 2
    half_lateral = s * det.length / 2 + c * det.width / 2
    if abs(det.y) - half_lateral > PATH_HALF_WIDTH:
        return math.inf
    near = det.x - half_forward
    if det.x + half_forward <= 0.0:
        return math.inf
    return max(near - FRONT_OFFSET, 0.0)


def _lidar_gap(obs: Observation) -> float:
    ranges = np.asarray(obs.lidar, dtype=float)
    if ranges.size == 0:
        return math.inf
    angles = 2.0 * math.pi * np.arange(ranges.size) / ranges.size
    forward = ranges * np.cos(angles)
    lateral = ranges * np.sin(angles)
    hit = (ranges < obs.lidar_max_range) & (forward > 0.0) & (np.abs(lateral) <= PATH_HALF_WIDTH)
    if not hit.any():
        return math.inf
    return float(max(forward[hit].min() - FRONT_OFFSET, 0.0))


def obstacle_gap(obs: Observation) -> float:
    gaps = [_detection_gap(det) for det in obs.detections]
    return min(gaps + [_lidar_gap(obs)])


def passive(obs: Observation) -> EgoAction:
    return STOP


def constant_speed(obs: Observation) -> EgoAction:
    return STRAIGHT


def emergency_brake(obs: Observation) -> EgoAction:
    if obstacle_gap(obs) <= braking_distance(obs.ego.speed):
        return STOP
    return STRAIGHT


def waypoint_follower(obs: Observation) -> EgoAction:
    bearing = obs.goal.bearing
    if abs(bearing) > TURN_BEARING and obs.goal.distance < TURN_DISTANCE:
        return EgoAction.of(DiscreteAction.TURN_LEFT if bearing > 0 else DiscreteAction.TURN_RIGHT)
    return STRAIGHT


BUILTIN_POLICIES: Dict[str, Callable[[Observation], EgoAction]] = {
    "passive": passive,
    "constant_speed": constant_speed,
    "emergency_brake": emergency_brake,
    "waypoint_follower": waypoint_follower,
}
BUILTIN_NAMES = tuple(BUILTIN_POLICIES)


def builtin_act(name: str, observation: Observation) -> EgoAction:
    try:
        policy = BUILTIN_POLICIES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown builtin policy '{name}' (known: {', '.join(BUILTIN_NAMES)})"
        ) from None
    return policy(observation)
