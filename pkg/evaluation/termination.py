# evaluation/termination.py
"""
Per-tick termination decision. At most one reason per tick, in the order
collision > goal > stalled > timeout.
"""

from enum import Enum
from typing import Iterable, Optional

from scenario_model.types import ScenarioSpec
from world_engine.state import EventKind, WorldEvent, WorldState
from world_engine.triggers import ticks_for


class TerminalReason(str, Enum):
    COLLISION = "collision"
    GOAL = "goal"
    STALLED = "stalled"
    TIMEOUT = "timeout"
    POLICY_FAULT = "policy_fault"


def stalled_ticks(spec: ScenarioSpec, dt: float) -> int:
    return int(round(spec.stationary_timeout / dt))


def horizon_ticks(spec: ScenarioSpec, dt: float) -> int:
    """Tick at which sim_time reaches tn"""
    return ticks_for(spec.tn - spec.t0, dt)


def update_evaluation(world: WorldState, events: Iterable[WorldEvent],
                      spec: ScenarioSpec) -> Optional[TerminalReason]:
    """None while the run continues, otherwise the reason it ends on this tick"""
    if spec.constraints.end_on_collision and any(e.kind == EventKind.COLLISION for e in events):
        return TerminalReason.COLLISION
    if world.goal_reached:
        return TerminalReason.GOAL
    if world.still_ticks >= stalled_ticks(spec, world.dt):
        return TerminalReason.STALLED
    if world.tick >= horizon_ticks(spec, world.dt):
        return TerminalReason.TIMEOUT
    return None
