# evaluation/metrics.py
"""
Run metrics accumulated tick by tick: route completion, closest approach to
any actor and the smallest time-to-collision seen.
"""

import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from scenario_model.roadmap import lane_travel_points, project_onto_lane, wrap_angle
from scenario_model.types import ScenarioSpec
from world_engine.state import WorldState


class RunMetrics(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    route_completion: float = Field(ge=0.0, le=1.0)
    min_distance_to_any_actor: Optional[float] = None
    ticks_elapsed: int = Field(ge=0)
    min_time_to_collision: Optional[float] = None


class MetricsTracker:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        pose = spec.ego_spawn.pose
        self._goal = spec.goal_region.center
        self._start = (pose.x, pose.y)
        self._route = None
        self._s0 = 0.0
        self._length = 0.0

        aligned = []
        for lane in spec.map.lanes:
            points = lane_travel_points(lane)
            proj = project_onto_lane(points, pose.x, pose.y)
            if abs(wrap_angle(proj.heading - pose.heading)) < math.pi / 2:
                aligned.append((proj.distance, lane.id, points, proj))
        if aligned:
            _, _, points, proj = min(aligned, key=lambda item: (item[0], item[1]))
            goal_s = project_onto_lane(points, *self._goal).s
            if goal_s - proj.s > 1e-6:
                self._route, self._s0, self._length = points, proj.s, goal_s - proj.s

        self.best_progress = 0.0
        self.min_distance: Optional[float] = None
        self.min_ttc: Optional[float] = None
        self.ticks = 0

    def _progress(self, x: float, y: float) -> float:
        if self._route is not None:
            s = project_onto_lane(self._route, x, y).s
            return (s - self._s0) / self._length
        total = math.hypot(self._goal[0] - self._start[0], self._goal[1] - self._start[1])
        if total <= 1e-6:
            return 1.0
        return 1.0 - math.hypot(self._goal[0] - x, self._goal[1] - y) / total

    def update(self, world: WorldState) -> None:
        ego = world.ego
        self.ticks = world.tick
        progress = 1.0 if world.goal_reached else self._progress(ego.x, ego.y)
        self.best_progress = max(self.best_progress, min(max(progress, 0.0), 1.0))

        evx, evy = ego.speed * math.cos(ego.heading), ego.speed * math.sin(ego.heading)
        for actor_id in world.active_ids():
            s = world.actor_states[actor_id]
            dx, dy = s.x - ego.x, s.y - ego.y
            dist = math.hypot(dx, dy)
            if self.min_distance is None or dist < self.min_distance:
                self.min_distance = dist
            if dist <= 1e-9:
                continue
            rvx = s.speed * math.cos(s.heading) - evx
            rvy = s.speed * math.sin(s.heading) - evy
            closing = -(dx * rvx + dy * rvy) / dist
            if closing > 1e-9:
                ttc = dist / closing
                if self.min_ttc is None or ttc < self.min_ttc:
                    self.min_ttc = ttc

    def result(self) -> RunMetrics:
        return RunMetrics(
            route_completion=self.best_progress,
            min_distance_to_any_actor=self.min_distance,
            ticks_elapsed=self.ticks,
            min_time_to_collision=self.min_ttc,
        )
