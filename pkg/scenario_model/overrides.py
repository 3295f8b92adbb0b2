# scenario_model/overrides.py
"""
Parameter overrides: weather, traffic density, seed, trigger timing and ego speed.
apply_overrides never mutates its input and always returns a re-validated spec.
"""

from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from scenario_model.errors import OverrideError
from scenario_model.types import ScenarioSpec, TimeAtLeast, TrafficDensity
from scenario_model.validation import validate_scenario
from scenario_model.weather import WEATHER_PRESETS


class Overrides(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    weather: Optional[str] = None
    traffic_density: Optional[TrafficDensity] = None
    seed: Optional[int] = None
    trigger_shifts: Dict[str, float] = Field(default_factory=dict)
    ego_speed: Optional[float] = None

    def is_empty(self) -> bool:
        return self == Overrides()

    def to_dict(self) -> Dict[str, Any]:
        """Compact JSON-ready form, omitting fields that are not overridden"""
        data = self.model_dump(mode="json", exclude_none=True)
        if not data.get("trigger_shifts"):
            data.pop("trigger_shifts", None)
        return data


def timed_trigger_ids(spec: ScenarioSpec):
    return [t.id for t in spec.triggers if any(isinstance(c, TimeAtLeast) for c in t.conditions)]


def shift_all_timed_triggers(spec: ScenarioSpec, delta: float) -> Dict[str, float]:
    """Trigger-shift map moving every time-based trigger of spec by delta seconds"""
    if delta == 0.0:
        return {}
    return {trigger_id: delta for trigger_id in timed_trigger_ids(spec)}


def apply_overrides(spec: ScenarioSpec, overrides: Union[Overrides, Dict[str, Any], None]) -> ScenarioSpec:
    if overrides is None:
        return spec
    if isinstance(overrides, dict):
        try:
            overrides = Overrides.model_validate(overrides)
        except ValidationError as e:
            raise OverrideError(f"invalid overrides: {e.error_count()} problem(s)") from None

    update: Dict[str, Any] = {}
    if overrides.weather is not None:
        if overrides.weather not in WEATHER_PRESETS:
            raise OverrideError(f"unknown weather preset '{overrides.weather}'")
        update["weather"] = overrides.weather
    if overrides.traffic_density is not None:
        update["traffic_density"] = overrides.traffic_density
    if overrides.seed is not None:
        update["default_seed"] = overrides.seed
    if overrides.ego_speed is not None:
        update["ego_spawn"] = spec.ego_spawn.model_copy(update={"speed": overrides.ego_speed})

    if overrides.trigger_shifts:
        known = {t.id for t in spec.triggers}
        unknown = sorted(set(overrides.trigger_shifts) - known)
        if unknown:
            raise OverrideError(f"unknown trigger id(s): {', '.join(unknown)}")
        triggers = []
        for trigger in spec.triggers:
            shift = overrides.trigger_shifts.get(trigger.id)
            if shift is None:
                triggers.append(trigger)
                continue
            if not any(isinstance(c, TimeAtLeast) for c in trigger.conditions):
                raise OverrideError(f"trigger '{trigger.id}' has no time condition to shift")
            conditions = tuple(
                c.model_copy(update={"t": c.t + shift}) if isinstance(c, TimeAtLeast) else c
                for c in trigger.conditions
            )
            triggers.append(trigger.model_copy(update={"conditions": conditions}))
        update["triggers"] = tuple(triggers)

    if not update:
        return spec
    result = spec.model_copy(update=update)
    violations = validate_scenario(result)
    if violations:
        raise OverrideError("override produces an invalid scenario: " + "; ".join(str(v) for v in violations))
    return result
