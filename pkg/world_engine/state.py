# world_engine/state.py
"""
Simulation state values: kinematic states, actor metadata, world events and
the WorldState snapshot produced by every tick.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, FrozenSet, Optional, Tuple

from scenario_model.types import ActorClass, BehaviorScript, Pose2D
from world_engine.geometry import OrientedBox
from world_engine.rng import RngStreams

EGO_ID = "ego"
EGO_LENGTH = 4.6
EGO_WIDTH = 1.9
EGO_HEIGHT = 1.6


@dataclass(frozen=True)
class KinematicState:
    x: float
    y: float
    heading: float
    speed: float = 0.0
    steer: float = 0.0
    height: float = 0.0
    vz: float = 0.0
    active: bool = True

    @property
    def pose(self) -> Pose2D:
        return Pose2D(x=self.x, y=self.y, heading=self.heading)

    def moved(self, **changes) -> "KinematicState":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": self.x, "y": self.y, "heading": self.heading, "speed": self.speed,
            "steer": self.steer, "height": self.height, "vz": self.vz, "active": self.active,
        }


@dataclass(frozen=True)
class ActorInfo:
    """Static facts about one actor for the whole run"""

    id: str
    true_class: ActorClass
    apparent_class: ActorClass
    length: float
    width: float
    background: bool = False


@dataclass(frozen=True)
class ActorRuntime:
    """Behavior bookkeeping that is not part of the kinematic state"""

    behavior: BehaviorScript
    waypoint_index: int = 0
    door_angle: float = 0.0
    hinge: Optional[Tuple[float, float, float]] = None


class EventKind(str, Enum):
    TRIGGER_FIRED = "TriggerFired"
    COLLISION = "Collision"
    ACTOR_ACTIVATED = "ActorActivated"
    ACTOR_DESPAWNED = "ActorDespawned"
    GOAL_REACHED = "GoalReached"
    ACTOR_CONTACT = "ActorContact"
    POLICY_WARNING = "PolicyWarning"
    PROTOCOL_SUBSTITUTION = "ProtocolSubstitution"


@dataclass(frozen=True)
class CollisionEvent:
    tick: int
    actor_id: str
    actor_true_class: ActorClass
    relative_speed: float
    penetration: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tick": self.tick,
            "actor_id": self.actor_id,
            "actor_true_class": self.actor_true_class.value,
            "relative_speed": self.relative_speed,
            "penetration": self.penetration,
        }


@dataclass(frozen=True)
class WorldEvent:
    tick: int
    kind: EventKind
    payload: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"tick": self.tick, "kind": self.kind.value, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorldEvent":
        return cls(tick=int(data["tick"]), kind=EventKind(data["kind"]), payload=dict(data.get("payload", {})))

    @property
    def collision(self) -> Optional[CollisionEvent]:
        if self.kind != EventKind.COLLISION:
            return None
        p = self.payload
        return CollisionEvent(
            tick=self.tick,
            actor_id=p["actor_id"],
            actor_true_class=ActorClass(p["actor_true_class"]),
            relative_speed=p["relative_speed"],
            penetration=p["penetration"],
        )


@dataclass(frozen=True)
class WorldState:
    tick: int
    t0: float
    dt: float
    ego: KinematicState
    actor_states: Dict[str, KinematicState]
    actor_info: Dict[str, ActorInfo]
    runtime: Dict[str, ActorRuntime]
    fired_triggers: FrozenSet[str]
    rng_state: RngStreams
    event_log: Tuple[WorldEvent, ...] = ()
    ego_contacts: FrozenSet[str] = frozenset()
    actor_contacts: FrozenSet[Tuple[str, str]] = frozenset()
    goal_reached: bool = False
    still_ticks: int = 0

    @property
    def sim_time(self) -> float:
        return self.t0 + self.tick * self.dt

    def active_ids(self):
        return [i for i in sorted(self.actor_states) if self.actor_states[i].active]

    def box(self, actor_id: str) -> OrientedBox:
        if actor_id == EGO_ID:
            return ego_box(self.ego)
        s, info = self.actor_states[actor_id], self.actor_info[actor_id]
        return OrientedBox.from_pose(s.x, s.y, s.heading, info.length, info.width)

    def ego_box(self) -> OrientedBox:
        return ego_box(self.ego)


def ego_box(ego: KinematicState) -> OrientedBox:
    return OrientedBox.from_pose(ego.x, ego.y, ego.heading, EGO_LENGTH, EGO_WIDTH)
