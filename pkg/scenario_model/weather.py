# scenario_model/weather.py
"""
The nine predefined weather presets.
Weather is constant for a run; each preset fixes road friction, visibility
range and lidar noise. The numbers are our own defaults, not measured values.
"""

from typing import Dict, List

from pydantic import BaseModel, ConfigDict

from scenario_model.errors import ConfigurationError


class WeatherPreset(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    friction_mu: float
    visibility_range: float
    lidar_noise_sigma: float
    description: str = ""


_TABLE = [
    # id,                 mu,   visibility m, noise m
    ("clear-noon",        0.90, 120.0, 0.02, "Dry road, full daylight"),
    ("cloudy-noon",       0.85, 100.0, 0.03, "Overcast daylight"),
    ("wet-noon",          0.70,  90.0, 0.04, "Wet road after rain, daylight"),
    ("hard-rain-noon",    0.50,  45.0, 0.08, "Heavy rain, standing water"),
    ("clear-sunset",      0.90,  70.0, 0.03, "Dry road, low sun glare"),
    ("wet-sunset",        0.70,  55.0, 0.05, "Wet road at dusk"),
    ("hard-rain-sunset",  0.50,  35.0, 0.09, "Heavy rain at dusk"),
    ("clear-night",       0.90,  40.0, 0.04, "Dry road, street lighting only"),
    ("fog-morning",       0.70,  20.0, 0.10, "Dense morning fog"),
]

WEATHER_PRESETS: Dict[str, WeatherPreset] = {
    row[0]: WeatherPreset(
        id=row[0], friction_mu=row[1], visibility_range=row[2],
        lidar_noise_sigma=row[3], description=row[4],
    )
    for row in _TABLE
}


def weather_ids() -> List[str]:
    return [row[0] for row in _TABLE]


def get_weather(weather_id: str) -> WeatherPreset:
    try:
        return WEATHER_PRESETS[weather_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown weather preset '{weather_id}' (known: {', '.join(weather_ids())})"
        ) from None
