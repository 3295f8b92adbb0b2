# world_engine/triggers.py
"""
One-shot trigger evaluation and trigger actions.
Time conditions are compared on integer ticks so that firing never depends
on floating-point accumulation of sim_time.
"""

import math
from dataclasses import replace
from typing import List, Tuple

from scenario_model.types import (
    ActivateActor,
    ActorWithin,
    ApplyImpulse,
    BehaviorKind,
    Despawn,
    EgoSpeedAbove,
    EgoWithin,
    ScenarioSpec,
    SetBehavior,
    TimeAtLeast,
)
from world_engine.behaviors import spawn_actor, start_behavior
from world_engine.state import ActorRuntime, EventKind, WorldEvent, WorldState


def ticks_for(duration: float, dt: float) -> int:
    """First tick at or after duration seconds from t0"""
    if duration <= 0.0:
        return 0
    return int(math.ceil(round(duration / dt, 9)))


def condition_holds(condition, world: WorldState, spec: ScenarioSpec) -> bool:
    if isinstance(condition, TimeAtLeast):
        return world.tick >= ticks_for(condition.t - spec.t0, world.dt)
    if isinstance(condition, EgoWithin):
        px, py = condition.point
        return math.hypot(world.ego.x - px, world.ego.y - py) <= condition.radius
    if isinstance(condition, ActorWithin):
        state = world.actor_states.get(condition.actor_id)
        if state is None or not state.active:
            return False
        px, py = condition.point
        return math.hypot(state.x - px, state.y - py) <= condition.radius
    if isinstance(condition, EgoSpeedAbove):
        return world.ego.speed > condition.speed
    return False


def evaluate_triggers(world: WorldState, spec: ScenarioSpec) -> Tuple[WorldState, List[Tuple[str, object]]]:
    """
    Find the unfired triggers whose conditions all hold, mark them fired and
    return them in trigger-id order together with the updated world.
    """
    fired = []
    for trigger in sorted(spec.triggers, key=lambda t: t.id):
        if trigger.id in world.fired_triggers:
            continue
        if all(condition_holds(c, world, spec) for c in trigger.conditions):
            fired.append((trigger.id, trigger.action))
    if not fired:
        return world, []
    marked = world.fired_triggers | {trigger_id for trigger_id, _ in fired}
    return replace(world, fired_triggers=frozenset(marked)), fired


def apply_action(world: WorldState, spec: ScenarioSpec, action) -> Tuple[WorldState, List[WorldEvent]]:
    actor_id = action.actor_id
    info = world.actor_info[actor_id]
    state = world.actor_states[actor_id]
    runtime = world.runtime[actor_id]
    states = dict(world.actor_states)
    runtimes = dict(world.runtime)
    events: List[WorldEvent] = []

    if isinstance(action, ActivateActor):
        if state.active:
            return world, []
        actor = spec.actor(actor_id)
        new_state, new_runtime = spawn_actor(info, actor.spawn, runtime.behavior)
        states[actor_id], runtimes[actor_id] = new_state, new_runtime
        events.append(WorldEvent(world.tick, EventKind.ACTOR_ACTIVATED, {"actor_id": actor_id}))
    elif isinstance(action, SetBehavior):
        hinge = runtime.hinge
        new_state, new_runtime = start_behavior(info, state, action.behavior, hinge=hinge)
        if not state.active:
            new_state = new_state.moved(active=False)
        states[actor_id], runtimes[actor_id] = new_state, new_runtime
    elif isinstance(action, ApplyImpulse):
        vx, vy, vz = action.velocity
        speed = math.hypot(vx, vy)
        heading = math.atan2(vy, vx) if speed > 0.0 else state.heading
        states[actor_id] = state.moved(speed=speed, heading=heading, vz=vz)
        ballistic = runtime.behavior.model_copy(update={"kind": BehaviorKind.BALLISTIC})
        runtimes[actor_id] = ActorRuntime(behavior=ballistic, hinge=runtime.hinge)
    elif isinstance(action, Despawn):
        if not state.active:
            return world, []
        states[actor_id] = state.moved(active=False, speed=0.0)
        events.append(WorldEvent(world.tick, EventKind.ACTOR_DESPAWNED, {"actor_id": actor_id}))
        return replace(
            world,
            actor_states=states,
            runtime=runtimes,
            ego_contacts=world.ego_contacts - {actor_id},
            actor_contacts=frozenset(p for p in world.actor_contacts if actor_id not in p),
        ), events

    return replace(world, actor_states=states, runtime=runtimes), events


def run_triggers(world: WorldState, spec: ScenarioSpec) -> Tuple[WorldState, List[WorldEvent]]:
    """Evaluate triggers and apply every fired action in trigger-id order"""
    world, fired = evaluate_triggers(world, spec)
    events: List[WorldEvent] = []
    for trigger_id, action in fired:
        events.append(WorldEvent(world.tick, EventKind.TRIGGER_FIRED, {
            "trigger_id": trigger_id,
            "action": action.type,
            "actor_id": action.actor_id,
        }))
        world, action_events = apply_action(world, spec, action)
        events.extend(action_events)
    return world, events
