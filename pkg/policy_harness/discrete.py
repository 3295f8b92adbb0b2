# policy_harness/discrete.py
"""
Mapping of the four discrete decisions onto pedal and steering commands.

Straight follows the lane under the ego with pure pursuit and a proportional
speed controller toward the lane limit. TurnLeft / TurnRight steer onto the
adjacent lane on that side or onto a crossing branch ahead; with neither
available the decision degrades to Straight and a warning is returned.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from policy_harness.actions import DiscreteAction, EgoAction
from scenario_model.roadmap import LaneProjection, lane_travel_points, point_along, project_onto_lane, wrap_angle
from scenario_model.types import Lane, RoadMap
from world_engine.kinematics import MAX_STEER, MAX_THROTTLE_ACCEL, WHEELBASE, ContinuousControl
from world_engine.state import KinematicState

logger = logging.getLogger(__name__)

MIN_LOOKAHEAD = 5.0
LOOKAHEAD_GAIN = 0.8
SPEED_GAIN = 1.0
BRAKE_AUTHORITY = 8.0
TURN_SPEED = 6.0
ADJACENT_LATERAL = (2.0, 6.0)
BRANCH_RANGE = 30.0
BRANCH_MAX_OFFSET = 15.0
SAME_DIRECTION = math.pi / 4
OPPOSITE_DIRECTION = 3 * math.pi / 4
BRANCH_ANGLES = (math.pi / 4, 3 * math.pi / 4)


@dataclass(frozen=True)
class _LaneView:
    lane: Lane
    points: np.ndarray


@dataclass(frozen=True)
class _Candidate:
    view: _LaneView
    projection: LaneProjection
    forward: float          # ego frame
    left: float             # ego frame
    relative_heading: float


def speed_command(speed: float, target: float) -> Tuple[float, float]:
    """(throttle, brake) of the proportional speed loop"""
    accel = SPEED_GAIN * (target - speed)
    if accel >= 0.0:
        return min(accel / MAX_THROTTLE_ACCEL, 1.0), 0.0
    return 0.0, min(-accel / BRAKE_AUTHORITY, 1.0)


def pursuit_steer(ego: KinematicState, target: Tuple[float, float]) -> float:
    """Normalized steer that puts the rear axle arc through target"""
    dx, dy = target[0] - ego.x, target[1] - ego.y
    distance = math.hypot(dx, dy)
    if distance < 1e-6:
        return 0.0
    alpha = wrap_angle(math.atan2(dy, dx) - ego.heading)
    angle = math.atan2(2.0 * WHEELBASE * math.sin(alpha), distance)
    return max(-1.0, min(1.0, angle / MAX_STEER))


class DiscreteMapper:
    """Per-run mapper; lane polylines are prepared once from the road map"""

    def __init__(self, road_map: RoadMap):
        self.road_map = road_map
        self._views = [_LaneView(lane, lane_travel_points(lane)) for lane in road_map.lanes]

    def _candidates(self, ego: KinematicState) -> List[_Candidate]:
        c, s = math.cos(ego.heading), math.sin(ego.heading)
        out = []
        for view in self._views:
            proj = project_onto_lane(view.points, ego.x, ego.y)
            px, py, _ = point_along(view.points, proj.s)
            dx, dy = px - ego.x, py - ego.y
            out.append(_Candidate(
                view=view,
                projection=proj,
                forward=c * dx + s * dy,
                left=-s * dx + c * dy,
                relative_heading=wrap_angle(proj.heading - ego.heading),
            ))
        return out

    def current_lane(self, ego: KinematicState) -> Optional[_Candidate]:
        """Nearest lane whose travel direction agrees with the ego heading"""
        aligned = [cand for cand in self._candidates(ego) if abs(cand.relative_heading) < math.pi / 2]
        if not aligned:
            return None
        return min(aligned, key=lambda cand: (cand.projection.distance, cand.view.lane.id))

    def _follow(self, ego: KinematicState, cand: _Candidate, target_speed: float) -> ContinuousControl:
        lookahead = max(MIN_LOOKAHEAD, LOOKAHEAD_GAIN * ego.speed)
        tx, ty, _ = point_along(cand.view.points, cand.projection.s + lookahead)
        throttle, brake = speed_command(ego.speed, target_speed)
        return ContinuousControl(throttle, brake, pursuit_steer(ego, (tx, ty))).clamped()

    def _turn_target(self, ego: KinematicState, current: Optional[_Candidate],
                     side: float) -> Optional[Tuple[_Candidate, bool]]:
        """(candidate, is_branch) for the lane or branch on side (+1 left, -1 right)"""
        lo, hi = ADJACENT_LATERAL
        current_id = current.view.lane.id if current is not None else None
        one_way_here = current is not None and current.view.lane.one_way
        adjacent, branches = [], []
        for cand in self._candidates(ego):
            lane = cand.view.lane
            if lane.id == current_id:
                continue
            offset = side * cand.left
            rel = abs(cand.relative_heading)
            if lo <= offset <= hi:
                if rel < SAME_DIRECTION:
                    adjacent.append(cand)
                elif rel > OPPOSITE_DIRECTION and not (one_way_here or lane.one_way):
                    adjacent.append(cand)
            turn = side * cand.relative_heading
            if (BRANCH_ANGLES[0] <= turn <= BRANCH_ANGLES[1]
                    and 0.0 < cand.forward <= BRANCH_RANGE and abs(cand.left) <= BRANCH_MAX_OFFSET):
                branches.append(cand)
        if adjacent:
            return min(adjacent, key=lambda cand: (abs(cand.left), cand.view.lane.id)), False
        if branches:
            return min(branches, key=lambda cand: (cand.forward, cand.view.lane.id)), True
        return None

    def _straight(self, ego: KinematicState, current: Optional[_Candidate]) -> ContinuousControl:
        if current is None:
            limit = min(view.lane.speed_limit for view in self._views)
            throttle, brake = speed_command(ego.speed, limit)
            return ContinuousControl(throttle, brake, 0.0)
        return self._follow(ego, current, current.view.lane.speed_limit)

    def map(self, decision: DiscreteAction, ego: KinematicState) -> Tuple[ContinuousControl, Optional[str]]:
        """Continuous control for decision plus a warning when a turn fell back"""
        if decision == DiscreteAction.STOP:
            return ContinuousControl(throttle=0.0, brake=1.0, steer=0.0), None

        current = self.current_lane(ego)
        if decision == DiscreteAction.STRAIGHT:
            return self._straight(ego, current), None

        side = 1.0 if decision == DiscreteAction.TURN_LEFT else -1.0
        target = self._turn_target(ego, current, side)
        if target is None:
            warning = f"{decision.value}: no lane or branch on that side, holding Straight"
            logger.debug("[!] %s", warning)
            return self._straight(ego, current), warning
        cand, is_branch = target
        speed = cand.view.lane.speed_limit
        if is_branch:
            speed = min(speed, TURN_SPEED)
        return self._follow(ego, cand, speed), None

    def resolve(self, action: EgoAction, ego: KinematicState) -> Tuple[ContinuousControl, Optional[str]]:
        if action.continuous is not None:
            return action.continuous.clamped(), None
        return self.map(action.discrete, ego)


def map_discrete(decision: DiscreteAction, ego: KinematicState,
                 road_map: RoadMap) -> Tuple[ContinuousControl, Optional[str]]:
    return DiscreteMapper(road_map).map(decision, ego)
