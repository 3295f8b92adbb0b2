# scenario_model/types.py
"""
Declarative scenario types shared by every other package.
All models are frozen pydantic models: pure values, safe to share.
"""

from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from scenario_model.severity import DEFAULT_WEIGHTS


class _Value(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class CornerCaseCategory(str, Enum):
    STATE_ANOMALY = "StateAnomaly"
    BEHAVIOR_ANOMALY = "BehaviorAnomaly"
    EVIDENCE_BASED_ANOMALY = "EvidenceBasedAnomaly"


class ActorClass(str, Enum):
    CAR = "car"
    EMERGENCY_VEHICLE = "emergency_vehicle"
    CYCLIST = "cyclist"
    PEDESTRIAN = "pedestrian"
    CHILD_PEDESTRIAN = "child_pedestrian"
    ANIMAL = "animal"
    BALL = "ball"
    LUGGAGE = "luggage"
    SHOPPING_CART = "shopping_cart"
    BARREL = "barrel"
    CAR_DOOR = "car_door"
    BILLBOARD = "billboard"
    STOP_SIGN = "stop_sign"
    YIELD_SIGN = "yield_sign"
    TRAFFIC_LIGHT = "traffic_light"
    PARKING_SIGN = "parking_sign"
    TURN_SIGN = "turn_sign"
    STATIC_OBSTACLE = "static_obstacle"


HUMAN_CLASSES = frozenset({ActorClass.PEDESTRIAN, ActorClass.CHILD_PEDESTRIAN})
VEHICLE_CLASSES = frozenset({ActorClass.CAR, ActorClass.EMERGENCY_VEHICLE})
SIGN_CLASSES = frozenset({
    ActorClass.STOP_SIGN, ActorClass.YIELD_SIGN, ActorClass.TRAFFIC_LIGHT,
    ActorClass.PARKING_SIGN, ActorClass.TURN_SIGN,
})
PROP_CLASSES = frozenset({
    ActorClass.BALL, ActorClass.LUGGAGE, ActorClass.SHOPPING_CART,
    ActorClass.BARREL, ActorClass.STATIC_OBSTACLE,
})
TRAFFIC_CONTROL_CLASSES = SIGN_CLASSES | {ActorClass.BILLBOARD}

# True classes allowed to present a different apparent class
DISGUISABLE_CLASSES = frozenset({ActorClass.BILLBOARD, ActorClass.PEDESTRIAN}) | SIGN_CLASSES | PROP_CLASSES


class TrafficDensity(str, Enum):
    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


DENSITY_VEHICLE_COUNT = {
    TrafficDensity.NONE: 0,
    TrafficDensity.LOW: 2,
    TrafficDensity.MEDIUM: 5,
    TrafficDensity.HIGH: 10,
}


class Pose2D(_Value):
    x: float
    y: float
    heading: float = 0.0


class EgoSpawn(_Value):
    pose: Pose2D
    speed: float = 0.0


class Rect(_Value):
    """Axis-aligned rectangle in metres"""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    @property
    def center(self) -> Tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


class Dimensions(_Value):
    length: float
    width: float


class Waypoint(_Value):
    x: float
    y: float
    speed: float


class BehaviorKind(str, Enum):
    STATIC = "static"
    WAYPOINT_FOLLOW = "waypoint_follow"
    BALLISTIC = "ballistic"
    ROLLING = "rolling"
    SCRIPTED_DOOR_SWING = "scripted_door_swing"
    PURSUIT = "pursuit"


class BehaviorScript(_Value):
    kind: BehaviorKind = BehaviorKind.STATIC
    waypoints: Tuple[Waypoint, ...] = ()
    parameters: Dict[str, float] = Field(default_factory=dict)
    target: Optional[str] = None

    def param(self, name: str, default: float) -> float:
        return self.parameters.get(name, default)


class ActorSpec(_Value):
    id: str
    true_class: ActorClass
    apparent_class: ActorClass
    spawn: Pose2D
    dimensions: Dimensions
    behavior: BehaviorScript = BehaviorScript()
    initially_active: bool = True

    @model_validator(mode="before")
    @classmethod
    def _apparent_defaults_to_true(cls, data):
        if isinstance(data, dict) and data.get("apparent_class") is None and "true_class" in data:
            data = dict(data)
            data["apparent_class"] = data["true_class"]
        return data


# --- trigger conditions -----------------------------------------------------

class TimeAtLeast(_Value):
    type: Literal["time_at_least"] = "time_at_least"
    t: float


class EgoWithin(_Value):
    type: Literal["ego_within"] = "ego_within"
    point: Tuple[float, float]
    radius: float


class ActorWithin(_Value):
    type: Literal["actor_within"] = "actor_within"
    actor_id: str
    point: Tuple[float, float]
    radius: float


class EgoSpeedAbove(_Value):
    type: Literal["ego_speed_above"] = "ego_speed_above"
    speed: float


Condition = Annotated[
    Union[TimeAtLeast, EgoWithin, ActorWithin, EgoSpeedAbove],
    Field(discriminator="type"),
]


# --- trigger actions --------------------------------------------------------

class ActivateActor(_Value):
    type: Literal["activate_actor"] = "activate_actor"
    actor_id: str


class SetBehavior(_Value):
    type: Literal["set_behavior"] = "set_behavior"
    actor_id: str
    behavior: BehaviorScript


class ApplyImpulse(_Value):
    type: Literal["apply_impulse"] = "apply_impulse"
    actor_id: str
    velocity: Tuple[float, float, float]


class Despawn(_Value):
    type: Literal["despawn"] = "despawn"
    actor_id: str


Action = Annotated[
    Union[ActivateActor, SetBehavior, ApplyImpulse, Despawn],
    Field(discriminator="type"),
]


class TriggerSpec(_Value):
    id: str
    conditions: Tuple[Condition, ...]
    action: Action
    one_shot: bool = True


class EvaluationMode(str, Enum):
    BINARY = "binary"
    WEIGHTED = "weighted"


class EvaluationConstraints(_Value):
    mode: EvaluationMode = EvaluationMode.BINARY
    weight_table: Dict[ActorClass, float] = Field(
        default_factory=lambda: {ActorClass(k): v for k, v in DEFAULT_WEIGHTS.items()}
    )
    failure_threshold: float = 0.0
    end_on_collision: bool = True


class Lane(_Value):
    """A lane centerline; travel follows point order when forward is true"""

    id: str
    centerline: Tuple[Tuple[float, float], ...]
    forward: bool = True
    speed_limit: float
    one_way: bool = False


class RoadMap(_Value):
    name: str
    drivable: Tuple[Tuple[Tuple[float, float], ...], ...]
    lanes: Tuple[Lane, ...]
    spawn_anchors: Dict[str, Pose2D] = Field(default_factory=dict)

    def lane(self, lane_id: str) -> Optional[Lane]:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        return None


class ScenarioSpec(_Value):
    id: str
    name: str
    category: CornerCaseCategory
    variant: bool = False
    description: str
    map: RoadMap
    ego_spawn: EgoSpawn
    goal_region: Rect
    actors: Tuple[ActorSpec, ...] = ()
    triggers: Tuple[TriggerSpec, ...] = ()
    weather: str = "clear-noon"
    traffic_density: TrafficDensity = TrafficDensity.NONE
    t0: float = 0.0
    tn: float
    stationary_timeout: float = 10.0
    constraints: EvaluationConstraints = EvaluationConstraints()
    default_seed: int = 0

    def actor(self, actor_id: str) -> Optional[ActorSpec]:
        for actor in self.actors:
            if actor.id == actor_id:
                return actor
        return None

    def trigger(self, trigger_id: str) -> Optional[TriggerSpec]:
        for trigger in self.triggers:
            if trigger.id == trigger_id:
                return trigger
        return None

    @property
    def actor_ids(self) -> List[str]:
        return [a.id for a in self.actors]
