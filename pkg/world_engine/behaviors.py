# world_engine/behaviors.py
"""
Scripted actor behaviors. Each kind advances one actor by one tick; none of
them react to the ego except pursuit, which chases a named target.
"""

import math
from typing import Dict, Tuple

from scenario_model.types import ActorClass, BehaviorKind, BehaviorScript, Pose2D
from world_engine.kinematics import BALL_ROLL_DECEL, SLIDE_DECEL, integrate_ballistic
from world_engine.state import ActorInfo, ActorRuntime, KinematicState

WAYPOINT_ACCEL = 2.5
WAYPOINT_REACHED = 0.3
ROLLING_DECEL = 0.4
ROLLING_MAX_SPEED = 15.0
DOOR_SWING_RATE = 1.5
DOOR_MAX_ANGLE = 1.2
PURSUIT_SPEED = 8.0
PURSUIT_ACCEL = 3.0


def _approach(current: float, target: float, step: float) -> float:
    if current < target:
        return min(target, current + step)
    return max(target, current - step)


def _door_center(hinge: Tuple[float, float, float], angle: float, length: float) -> Tuple[float, float, float]:
    hx, hy, closed = hinge
    heading = closed + angle
    return hx + 0.5 * length * math.cos(heading), hy + 0.5 * length * math.sin(heading), heading


def start_behavior(info: ActorInfo, state: KinematicState, behavior: BehaviorScript,
                   hinge: Tuple[float, float, float] = None) -> Tuple[KinematicState, ActorRuntime]:
    """Kinematic state and runtime for an actor (re)starting behavior from state"""
    kind = behavior.kind
    if kind == BehaviorKind.WAYPOINT_FOLLOW:
        speed = behavior.param("initial_speed", state.speed)
        return state.moved(speed=speed), ActorRuntime(behavior=behavior)
    if kind == BehaviorKind.ROLLING:
        return state.moved(speed=behavior.param("speed", state.speed)), ActorRuntime(behavior=behavior)
    if kind == BehaviorKind.BALLISTIC:
        vx, vy = behavior.param("vx", 0.0), behavior.param("vy", 0.0)
        speed = math.hypot(vx, vy)
        heading = math.atan2(vy, vx) if speed > 0.0 else state.heading
        return (
            state.moved(
                speed=speed,
                heading=heading,
                height=behavior.param("release_height", state.height),
                vz=behavior.param("vz", 0.0),
            ),
            ActorRuntime(behavior=behavior),
        )
    if kind == BehaviorKind.SCRIPTED_DOOR_SWING:
        if hinge is None:
            hinge = (state.x, state.y, state.heading)
        x, y, heading = _door_center(hinge, 0.0, info.length)
        return state.moved(x=x, y=y, heading=heading, speed=0.0), ActorRuntime(behavior=behavior, hinge=hinge)
    if kind == BehaviorKind.PURSUIT:
        return state.moved(speed=behavior.param("initial_speed", state.speed)), ActorRuntime(behavior=behavior)
    return state.moved(speed=0.0), ActorRuntime(behavior=behavior)


def spawn_actor(info: ActorInfo, spawn: Pose2D, behavior: BehaviorScript) -> Tuple[KinematicState, ActorRuntime]:
    base = KinematicState(x=spawn.x, y=spawn.y, heading=spawn.heading)
    return start_behavior(info, base, behavior)


def _follow_waypoints(state: KinematicState, runtime: ActorRuntime, dt: float) -> Tuple[KinematicState, ActorRuntime]:
    behavior = runtime.behavior
    waypoints = behavior.waypoints
    index = runtime.waypoint_index
    if index >= len(waypoints):
        return state.moved(speed=0.0), runtime

    accel = behavior.param("accel", WAYPOINT_ACCEL)
    v1 = _approach(state.speed, waypoints[index].speed, accel * dt)
    remaining = 0.5 * (state.speed + v1) * dt
    x, y, heading = state.x, state.y, state.heading
    while index < len(waypoints):
        wp = waypoints[index]
        dist = math.hypot(wp.x - x, wp.y - y)
        if dist > 1e-9:
            heading = math.atan2(wp.y - y, wp.x - x)
        if dist <= max(WAYPOINT_REACHED, remaining):
            step = min(dist, remaining)
            remaining -= step
            x, y = wp.x, wp.y
            index += 1
            if remaining <= 0.0:
                break
            continue
        x += remaining * math.cos(heading)
        y += remaining * math.sin(heading)
        break
    if index >= len(waypoints):
        v1 = 0.0
    return state.moved(x=x, y=y, heading=heading, speed=v1), ActorRuntime(
        behavior=behavior, waypoint_index=index, hinge=runtime.hinge
    )


def _roll(state: KinematicState, runtime: ActorRuntime, dt: float) -> KinematicState:
    b = runtime.behavior
    accel = b.param("downhill_accel", 0.0) - (b.param("rolling_decel", ROLLING_DECEL) if state.speed > 0.0 else 0.0)
    v1 = min(max(state.speed + accel * dt, 0.0), b.param("max_speed", ROLLING_MAX_SPEED))
    v_avg = 0.5 * (state.speed + v1)
    return state.moved(
        x=state.x + v_avg * math.cos(state.heading) * dt,
        y=state.y + v_avg * math.sin(state.heading) * dt,
        speed=v1,
    )


def _swing(info: ActorInfo, state: KinematicState, runtime: ActorRuntime, dt: float) -> Tuple[KinematicState, ActorRuntime]:
    b = runtime.behavior
    rate = b.param("swing_rate", DOOR_SWING_RATE) * b.param("side", 1.0)
    max_angle = abs(b.param("max_angle", DOOR_MAX_ANGLE))
    angle = min(max(runtime.door_angle + rate * dt, -max_angle), max_angle)
    moving = angle != runtime.door_angle
    x, y, heading = _door_center(runtime.hinge, angle, info.length)
    tip_speed = 0.5 * info.length * abs(rate) if moving else 0.0
    return (
        state.moved(x=x, y=y, heading=heading, speed=tip_speed),
        ActorRuntime(behavior=b, door_angle=angle, hinge=runtime.hinge),
    )


def _pursue(state: KinematicState, runtime: ActorRuntime, targets: Dict[str, KinematicState],
            dt: float) -> KinematicState:
    b = runtime.behavior
    target = targets.get(b.target)
    heading = state.heading
    if target is not None and target.active:
        dist = math.hypot(target.x - state.x, target.y - state.y)
        if dist > 1e-9:
            heading = math.atan2(target.y - state.y, target.x - state.x)
    v1 = _approach(state.speed, b.param("speed", PURSUIT_SPEED), b.param("accel", PURSUIT_ACCEL) * dt)
    v_avg = 0.5 * (state.speed + v1)
    return state.moved(
        x=state.x + v_avg * math.cos(heading) * dt,
        y=state.y + v_avg * math.sin(heading) * dt,
        heading=heading,
        speed=v1,
    )


def step_actor(info: ActorInfo, state: KinematicState, runtime: ActorRuntime,
               targets: Dict[str, KinematicState], dt: float) -> Tuple[KinematicState, ActorRuntime]:
    """Advance one active actor; targets maps ids (and 'ego') to pre-step states"""
    kind = runtime.behavior.kind
    if kind == BehaviorKind.WAYPOINT_FOLLOW:
        return _follow_waypoints(state, runtime, dt)
    if kind == BehaviorKind.BALLISTIC:
        decel = BALL_ROLL_DECEL if info.true_class == ActorClass.BALL else SLIDE_DECEL
        return integrate_ballistic(state, dt, ground_decel=decel), runtime
    if kind == BehaviorKind.ROLLING:
        return _roll(state, runtime, dt), runtime
    if kind == BehaviorKind.SCRIPTED_DOOR_SWING:
        return _swing(info, state, runtime, dt)
    if kind == BehaviorKind.PURSUIT:
        return _pursue(state, runtime, targets, dt), runtime
    return state, runtime
