# world_engine/engine.py
"""
World initialization and the fixed-order simulation step.

Per tick: (1) integrate the ego, (2) integrate scripted actors, (3) evaluate
triggers on the post-integration state and apply their actions, (4) detect
ego collisions and actor contacts, (5) append events. The returned world
carries tick + 1.
"""

import logging
import math
from dataclasses import replace
from itertools import combinations
from typing import Iterable, List, Optional, Tuple

from scenario_model.errors import WorldInitError
from scenario_model.types import ScenarioSpec
from scenario_model.weather import WeatherPreset
from world_engine.behaviors import spawn_actor, step_actor
from world_engine.geometry import OrientedBox, obb_overlap, penetration_depth
from world_engine.kinematics import ContinuousControl, integrate_bicycle
from world_engine.rng import RngStreams
from world_engine.state import (
    EGO_HEIGHT,
    EGO_ID,
    ActorInfo,
    ActorRuntime,
    EventKind,
    KinematicState,
    WorldEvent,
    WorldState,
    ego_box,
)
from world_engine.traffic import spawn_background
from world_engine.triggers import run_triggers

logger = logging.getLogger(__name__)

ENGINE_VERSION = "1.0.0"
DEFAULT_DT = 0.05
STILL_SPEED = 0.1


def _check_spawn_overlaps(ego: KinematicState, boxes: List[Tuple[str, OrientedBox]]) -> None:
    everything = [(EGO_ID, ego_box(ego))] + boxes
    for (a_id, a), (b_id, b) in combinations(everything, 2):
        if obb_overlap(a, b):
            raise WorldInitError(f"spawn overlap between '{a_id}' and '{b_id}'")


def init_world(spec: ScenarioSpec, seed: int, dt: float = DEFAULT_DT) -> WorldState:
    """Place the ego, initially active actors and background traffic at tick 0"""
    streams = RngStreams(seed)
    pose = spec.ego_spawn.pose
    ego = KinematicState(x=pose.x, y=pose.y, heading=pose.heading, speed=spec.ego_spawn.speed)

    states, infos, runtimes = {}, {}, {}
    active_boxes: List[Tuple[str, OrientedBox]] = []
    for actor in spec.actors:
        info = ActorInfo(
            id=actor.id,
            true_class=actor.true_class,
            apparent_class=actor.apparent_class,
            length=actor.dimensions.length,
            width=actor.dimensions.width,
        )
        infos[actor.id] = info
        if actor.initially_active:
            state, runtime = spawn_actor(info, actor.spawn, actor.behavior)
            active_boxes.append((actor.id, OrientedBox.from_pose(state.x, state.y, state.heading, info.length, info.width)))
        else:
            s = actor.spawn
            state = KinematicState(x=s.x, y=s.y, heading=s.heading, active=False)
            runtime = ActorRuntime(behavior=actor.behavior)
        states[actor.id], runtimes[actor.id] = state, runtime

    _check_spawn_overlaps(ego, active_boxes)

    background, streams = spawn_background(spec, ego, [b for _, b in active_boxes], streams)
    for info, state, runtime in background:
        infos[info.id], states[info.id], runtimes[info.id] = info, state, runtime

    inside_goal = spec.goal_region.contains(ego.x, ego.y)
    logger.debug(f"[+] World ready for {spec.id} (seed {seed}, {len(states)} actors)")
    return WorldState(
        tick=0,
        t0=spec.t0,
        dt=dt,
        ego=ego,
        actor_states=states,
        actor_info=infos,
        runtime=runtimes,
        fired_triggers=frozenset(),
        rng_state=streams,
        goal_reached=inside_goal,
    )


def _velocity(state: KinematicState) -> Tuple[float, float]:
    return state.speed * math.cos(state.heading), state.speed * math.sin(state.heading)


def _ego_collisions(world: WorldState) -> Tuple[frozenset, List[WorldEvent]]:
    ego = world.ego_box()
    evx, evy = _velocity(world.ego)
    touching, events = set(), []
    for actor_id in world.active_ids():
        state = world.actor_states[actor_id]
        if state.height > EGO_HEIGHT:
            continue
        box = world.box(actor_id)
        if math.hypot(box.cx - ego.cx, box.cy - ego.cy) > box.bounding_radius + ego.bounding_radius:
            continue
        if not obb_overlap(ego, box):
            continue
        touching.add(actor_id)
        if actor_id in world.ego_contacts:
            continue
        avx, avy = _velocity(state)
        events.append(WorldEvent(world.tick, EventKind.COLLISION, {
            "actor_id": actor_id,
            "actor_true_class": world.actor_info[actor_id].true_class.value,
            "relative_speed": math.hypot(evx - avx, evy - avy),
            "penetration": penetration_depth(ego, box),
        }))
    return frozenset(touching), events


def _actor_contacts(world: WorldState) -> Tuple[frozenset, List[WorldEvent]]:
    ids = world.active_ids()
    boxes = {i: world.box(i) for i in ids}
    touching, events = set(), []
    for a, b in combinations(ids, 2):
        ba, bb = boxes[a], boxes[b]
        if math.hypot(ba.cx - bb.cx, ba.cy - bb.cy) > ba.bounding_radius + bb.bounding_radius:
            continue
        if not obb_overlap(ba, bb):
            continue
        touching.add((a, b))
        if (a, b) not in world.actor_contacts:
            events.append(WorldEvent(world.tick, EventKind.ACTOR_CONTACT, {"actor_ids": [a, b]}))
    return frozenset(touching), events


def step(world: WorldState, ego_control: ContinuousControl, spec: ScenarioSpec, weather: WeatherPreset,
         policy_events: Optional[Iterable[WorldEvent]] = None) -> Tuple[WorldState, List[WorldEvent]]:
    """
    Advance the world by one tick. policy_events (warnings and substitutions
    raised while choosing this tick's action) are logged ahead of the step's
    own events.
    """
    dt = world.dt
    ego = integrate_bicycle(world.ego, ego_control, weather.friction_mu, dt)

    targets = dict(world.actor_states)
    targets[EGO_ID] = world.ego
    states, runtimes = dict(world.actor_states), dict(world.runtime)
    for actor_id in world.active_ids():
        states[actor_id], runtimes[actor_id] = step_actor(
            world.actor_info[actor_id], world.actor_states[actor_id], world.runtime[actor_id], targets, dt
        )

    moved = replace(world, tick=world.tick + 1, ego=ego, actor_states=states, runtime=runtimes)
    moved, events = run_triggers(moved, spec)

    ego_contacts, collision_events = _ego_collisions(moved)
    actor_contacts, contact_events = _actor_contacts(moved)
    events.extend(collision_events)
    events.extend(contact_events)

    goal_reached = moved.goal_reached
    if not goal_reached and spec.goal_region.contains(ego.x, ego.y):
        goal_reached = True
        events.append(WorldEvent(moved.tick, EventKind.GOAL_REACHED, {"x": ego.x, "y": ego.y}))
    still = ego.speed < STILL_SPEED and not spec.goal_region.contains(ego.x, ego.y)

    new_events = list(policy_events or []) + events
    moved = replace(
        moved,
        ego_contacts=ego_contacts,
        actor_contacts=actor_contacts,
        goal_reached=goal_reached,
        still_ticks=moved.still_ticks + 1 if still else 0,
        event_log=moved.event_log + tuple(new_events),
    )
    return moved, new_events
