# scenario_model/validation.py
"""
Invariant checks for a ScenarioSpec.
Violations are returned as data; callers decide whether to reject.
"""

import math
import re
from dataclasses import dataclass
from typing import List

import networkx as nx

from scenario_model.roadmap import drivable_paths, on_drivable
from scenario_model.types import (
    ActorClass,
    ActorWithin,
    BehaviorKind,
    BehaviorScript,
    DISGUISABLE_CLASSES,
    EgoSpeedAbove,
    EgoWithin,
    EvaluationMode,
    HUMAN_CLASSES,
    ScenarioSpec,
    SetBehavior,
    TRAFFIC_CONTROL_CLASSES,
    VEHICLE_CLASSES,
)
from scenario_model.weather import WEATHER_PRESETS

ID_PATTERN = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")
MAX_EGO_SPEED = 30.0
MAX_TRIGGER_CONDITIONS = 3
RESERVED_ACTOR_PREFIX = "bg-"


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.path}: {self.message}"


def _behavior_violations(behavior: BehaviorScript, path: str, actor_ids: set) -> List[Violation]:
    out = []
    if behavior.kind == BehaviorKind.WAYPOINT_FOLLOW and len(behavior.waypoints) < 2:
        out.append(Violation("WAYPOINTS_TOO_FEW", path, "waypoint_follow needs at least 2 waypoints"))
    if behavior.kind == BehaviorKind.BALLISTIC:
        missing = [k for k in ("vx", "vy", "vz") if k not in behavior.parameters]
        if missing:
            out.append(Violation("BALLISTIC_PARAMS", path, f"ballistic needs initial velocity ({', '.join(missing)} missing)"))
        if behavior.param("release_height", 0.0) < 0.0:
            out.append(Violation("BALLISTIC_PARAMS", path, "release_height must be >= 0"))
    if behavior.kind == BehaviorKind.PURSUIT:
        if behavior.target is None:
            out.append(Violation("PURSUIT_TARGET", path, "pursuit needs a target"))
        elif behavior.target != "ego" and behavior.target not in actor_ids:
            out.append(Violation("DANGLING_ACTOR_REF", path, f"pursuit target '{behavior.target}' does not exist"))
    for wp in behavior.waypoints:
        if wp.speed < 0.0:
            out.append(Violation("WAYPOINT_SPEED", path, "waypoint speeds must be >= 0"))
            break
    return out


def _condition_actor_refs(trigger) -> set:
    return {c.actor_id for c in trigger.conditions if isinstance(c, ActorWithin)}


def _trigger_graph(spec: ScenarioSpec) -> nx.DiGraph:
    """Edge a -> b when a's action touches an actor that b's conditions watch"""
    graph = nx.DiGraph()
    for trigger in spec.triggers:
        graph.add_node(trigger.id)
    for a in spec.triggers:
        for b in spec.triggers:
            if a.action.actor_id in _condition_actor_refs(b):
                graph.add_edge(a.id, b.id)
    return graph


def validate_scenario(spec: ScenarioSpec) -> List[Violation]:
    """Return every invariant violation of spec; an empty list means valid"""
    v: List[Violation] = []

    if not ID_PATTERN.match(spec.id):
        v.append(Violation("ID_FORMAT", "id", f"'{spec.id}' is not kebab-case"))
    if spec.t0 < 0.0:
        v.append(Violation("WINDOW_NEGATIVE", "t0", "t0 must be >= 0"))
    if not spec.tn > spec.t0:
        v.append(Violation("WINDOW_EMPTY", "tn", f"tn ({spec.tn}) must be greater than t0 ({spec.t0})"))
    if not spec.stationary_timeout > 0.0:
        v.append(Violation("STATIONARY_TIMEOUT", "stationary_timeout", "must be > 0"))
    if not 0 <= spec.default_seed < 2 ** 64:
        v.append(Violation("SEED_RANGE", "default_seed", "seed must be a 64-bit unsigned integer"))
    if spec.weather not in WEATHER_PRESETS:
        v.append(Violation("UNKNOWN_WEATHER", "weather", f"unknown weather preset '{spec.weather}'"))

    # map
    paths = drivable_paths(spec.map)
    if not spec.map.drivable:
        v.append(Violation("MAP_EMPTY", "map.drivable", "map has no drivable polygon"))
    for i, polygon in enumerate(spec.map.drivable):
        if len(polygon) < 3:
            v.append(Violation("POLYGON_DEGENERATE", f"map.drivable[{i}]", "a drivable polygon needs at least 3 vertices"))
    for i, lane in enumerate(spec.map.lanes):
        lpath = f"map.lanes[{i}]"
        if len(lane.centerline) < 2:
            v.append(Violation("LANE_TOO_SHORT", lpath, "centerline needs at least 2 points"))
        if not 0.0 < lane.speed_limit <= MAX_EGO_SPEED:
            v.append(Violation("SPEED_LIMIT", lpath, "speed limit must be in (0, 30] m/s"))
        if any(not on_drivable(paths, px, py) for px, py in lane.centerline):
            v.append(Violation("LANE_OFF_ROAD", lpath, f"lane '{lane.id}' leaves the drivable area"))
    lane_ids = [lane.id for lane in spec.map.lanes]
    if len(set(lane_ids)) != len(lane_ids):
        v.append(Violation("DUPLICATE_LANE_ID", "map.lanes", "lane ids must be unique"))

    # ego and goal
    pose = spec.ego_spawn.pose
    if not on_drivable(paths, pose.x, pose.y):
        v.append(Violation("SPAWN_OFF_ROAD", "ego_spawn", "ego spawn is outside the drivable area"))
    if not 0.0 <= spec.ego_spawn.speed <= MAX_EGO_SPEED:
        v.append(Violation("EGO_SPEED_RANGE", "ego_spawn.speed", "initial speed must be in [0, 30] m/s"))
    goal = spec.goal_region
    if not (goal.x_min < goal.x_max and goal.y_min < goal.y_max):
        v.append(Violation("GOAL_EMPTY", "goal_region", "goal rectangle has no area"))
    elif not on_drivable(paths, *goal.center):
        v.append(Violation("GOAL_OFF_ROAD", "goal_region", "goal region is outside the drivable area"))

    # actors
    actor_ids = set()
    for i, actor in enumerate(spec.actors):
        apath = f"actors[{i}]"
        if actor.id in actor_ids:
            v.append(Violation("DUPLICATE_ACTOR_ID", apath, f"actor id '{actor.id}' used twice"))
        actor_ids.add(actor.id)
        if actor.id == "ego" or actor.id.startswith(RESERVED_ACTOR_PREFIX):
            v.append(Violation("RESERVED_ACTOR_ID", apath, f"actor id '{actor.id}' is reserved"))
        if not (actor.dimensions.length > 0.0 and actor.dimensions.width > 0.0):
            v.append(Violation("DIMENSIONS_NOT_POSITIVE", apath, "dimensions must be strictly positive"))
        if actor.apparent_class != actor.true_class and actor.true_class not in DISGUISABLE_CLASSES:
            v.append(Violation(
                "APPARENT_CLASS_FORBIDDEN", apath,
                f"a {actor.true_class.value} cannot present as {actor.apparent_class.value}",
            ))
    for i, actor in enumerate(spec.actors):
        v.extend(_behavior_violations(actor.behavior, f"actors[{i}].behavior", actor_ids))

    # triggers
    trigger_ids = set()
    for i, trigger in enumerate(spec.triggers):
        tpath = f"triggers[{i}]"
        if trigger.id in trigger_ids:
            v.append(Violation("DUPLICATE_TRIGGER_ID", tpath, f"trigger id '{trigger.id}' used twice"))
        trigger_ids.add(trigger.id)
        if not 1 <= len(trigger.conditions) <= MAX_TRIGGER_CONDITIONS:
            v.append(Violation("TRIGGER_ARITY", tpath, "a trigger needs 1 to 3 conditions"))
        if not trigger.one_shot:
            v.append(Violation("ONE_SHOT_REQUIRED", tpath, "only one-shot triggers are supported"))
        for cond in trigger.conditions:
            if isinstance(cond, ActorWithin) and cond.actor_id not in actor_ids:
                v.append(Violation("DANGLING_ACTOR_REF", tpath, f"condition references unknown actor '{cond.actor_id}'"))
            if isinstance(cond, (EgoWithin, ActorWithin)) and not cond.radius > 0.0:
                v.append(Violation("RADIUS_NOT_POSITIVE", tpath, "radius must be > 0"))
            if isinstance(cond, EgoSpeedAbove) and cond.speed < 0.0:
                v.append(Violation("SPEED_THRESHOLD", tpath, "speed threshold must be >= 0"))
        if trigger.action.actor_id not in actor_ids:
            v.append(Violation("DANGLING_ACTOR_REF", tpath, f"action references unknown actor '{trigger.action.actor_id}'"))
        if isinstance(trigger.action, SetBehavior):
            v.extend(_behavior_violations(trigger.action.behavior, f"{tpath}.action.behavior", actor_ids))
    graph = _trigger_graph(spec)
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        v.append(Violation("TRIGGER_CYCLE", "triggers", f"trigger cycle: {' -> '.join(e[0] for e in cycle)}"))

    # evaluation constraints
    table = spec.constraints.weight_table
    missing = [c.value for c in ActorClass if c not in table]
    if missing:
        v.append(Violation("WEIGHT_TABLE_INCOMPLETE", "constraints.weight_table", f"missing classes: {', '.join(missing)}"))
    if any(w < 0.0 for w in table.values()):
        v.append(Violation("WEIGHT_NEGATIVE", "constraints.weight_table", "weights must be >= 0"))
    if spec.constraints.failure_threshold < 0.0:
        v.append(Violation("THRESHOLD_NEGATIVE", "constraints.failure_threshold", "threshold must be >= 0"))
    if spec.constraints.mode == EvaluationMode.WEIGHTED and not missing:
        humans = min(table[c] for c in HUMAN_CLASSES)
        vehicles = [table[c] for c in VEHICLE_CLASSES]
        signs = max(table[c] for c in TRAFFIC_CONTROL_CLASSES)
        if not (humans > max(vehicles) and min(vehicles) > signs):
            v.append(Violation(
                "WEIGHT_ORDER", "constraints.weight_table",
                "weighted mode requires humans > vehicles > signs/billboards",
            ))

    for name in ("t0", "tn", "stationary_timeout"):
        if not math.isfinite(getattr(spec, name)):
            v.append(Violation("NON_FINITE", name, "value must be finite"))
    return v
