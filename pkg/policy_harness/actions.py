# policy_harness/actions.py
"""
Ego actions: the four discrete decisions or a continuous pedal/steer command.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

from world_engine.kinematics import ContinuousControl


class DiscreteAction(str, Enum):
    STRAIGHT = "Straight"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    STOP = "Stop"


class MalformedAction(ValueError):
    """Wire payload that is not a valid EgoAction"""


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedAction(f"continuous.{name} must be a number")
    return float(value)


@dataclass(frozen=True)
class EgoAction:
    """Exactly one of discrete / continuous is set"""

    discrete: Optional[DiscreteAction] = None
    continuous: Optional[ContinuousControl] = None

    def __post_init__(self):
        if (self.discrete is None) == (self.continuous is None):
            raise MalformedAction("an action carries exactly one of discrete or continuous")

    @classmethod
    def of(cls, decision: DiscreteAction) -> "EgoAction":
        return cls(discrete=decision)

    @classmethod
    def control(cls, throttle: float, brake: float, steer: float) -> "EgoAction":
        return cls(continuous=ContinuousControl(throttle, brake, steer).clamped())

    @property
    def label(self) -> str:
        return self.discrete.value if self.discrete is not None else "continuous"

    def to_wire(self) -> Dict[str, Any]:
        if self.discrete is not None:
            return {"discrete": self.discrete.value}
        return {"continuous": self.continuous.to_dict()}

    @classmethod
    def from_wire(cls, payload: Any) -> "EgoAction":
        """Parse {"discrete": name} or {"continuous": {throttle, brake, steer}}; clamps on ingestion"""
        if not isinstance(payload, dict) or len(payload) != 1:
            raise MalformedAction("action payload must hold exactly one of 'discrete' or 'continuous'")
        if "discrete" in payload:
            try:
                return cls(discrete=DiscreteAction(payload["discrete"]))
            except (ValueError, TypeError):
                raise MalformedAction(f"unknown discrete action {payload['discrete']!r}") from None
        if "continuous" in payload:
            body = payload["continuous"]
            if not isinstance(body, dict) or set(body) != {"throttle", "brake", "steer"}:
                raise MalformedAction("continuous action needs exactly throttle, brake and steer")
            values = {k: _number(body[k], k) for k in ("throttle", "brake", "steer")}
            if any(math.isnan(v) for v in values.values()):
                raise MalformedAction("continuous action contains NaN")
            return cls.control(**values)
        raise MalformedAction("action payload must hold 'discrete' or 'continuous'")


STOP = EgoAction.of(DiscreteAction.STOP)
STRAIGHT = EgoAction.of(DiscreteAction.STRAIGHT)
