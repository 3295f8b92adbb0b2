# world_engine/kinematics.py
"""
Ego kinematic bicycle model and the ballistic channel used by falling or
launched props.

The bicycle update uses the mean of the old and new speed and the midpoint
heading of the step, which keeps straight-line and constant-curvature motion
close to the exact solution at 20 Hz.
"""

import math
from dataclasses import dataclass

from scenario_model.roadmap import wrap_angle
from world_engine.state import KinematicState

GRAVITY = 9.81
WHEELBASE = 2.7
MAX_STEER = 0.6
MAX_SPEED = 30.0
MAX_THROTTLE_ACCEL = 3.5
BALL_ROLL_DECEL = 0.4
SLIDE_DECEL = 4.0


def _clip(value: float, lo: float, hi: float) -> float:
    if value != value:  # NaN
        return 0.0 if lo <= 0.0 <= hi else lo
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class ContinuousControl:
    """Pedal and steering command; steer is normalized, +1 is full left"""

    throttle: float = 0.0
    brake: float = 0.0
    steer: float = 0.0

    def clamped(self) -> "ContinuousControl":
        return ContinuousControl(
            throttle=_clip(float(self.throttle), 0.0, 1.0),
            brake=_clip(float(self.brake), 0.0, 1.0),
            steer=_clip(float(self.steer), -1.0, 1.0),
        )

    def to_dict(self):
        return {"throttle": self.throttle, "brake": self.brake, "steer": self.steer}


def integrate_bicycle(state: KinematicState, control: ContinuousControl, friction_mu: float,
                      dt: float) -> KinematicState:
    c = control.clamped()
    limit = friction_mu * GRAVITY
    accel = _clip(c.throttle * MAX_THROTTLE_ACCEL - c.brake * limit, -limit, limit)
    steer = c.steer * MAX_STEER

    v0 = state.speed
    v1 = _clip(v0 + accel * dt, 0.0, MAX_SPEED)
    v_avg = 0.5 * (v0 + v1)
    dtheta = v_avg / WHEELBASE * math.tan(steer) * dt
    mid = state.heading + 0.5 * dtheta
    return state.moved(
        x=state.x + v_avg * math.cos(mid) * dt,
        y=state.y + v_avg * math.sin(mid) * dt,
        heading=wrap_angle(state.heading + dtheta),
        speed=v1,
        steer=steer,
    )


def integrate_ballistic(state: KinematicState, dt: float, ground_decel: float = SLIDE_DECEL) -> KinematicState:
    """
    Advance a prop under gravity. Airborne props keep their horizontal
    velocity; once on the ground they decelerate at ground_decel to rest.
    """
    airborne = state.height > 0.0 or state.vz > 0.0
    if airborne:
        height = state.height + state.vz * dt - 0.5 * GRAVITY * dt * dt
        vz = state.vz - GRAVITY * dt
        if height <= 0.0:
            height, vz = 0.0, 0.0
        return state.moved(
            x=state.x + state.speed * math.cos(state.heading) * dt,
            y=state.y + state.speed * math.sin(state.heading) * dt,
            height=height,
            vz=vz,
        )

    v1 = max(0.0, state.speed - ground_decel * dt)
    v_avg = 0.5 * (state.speed + v1)
    return state.moved(
        x=state.x + v_avg * math.cos(state.heading) * dt,
        y=state.y + v_avg * math.sin(state.heading) * dt,
        speed=v1,
    )
