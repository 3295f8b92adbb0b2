# scenario_model/severity.py
"""
Default collision severity table.
Only the ordering humans > vehicles > signs is mandated; the numbers are defaults
that a scenario may override in its evaluation constraints.
"""

from typing import Dict

DEFAULT_WEIGHTS: Dict[str, float] = {
    "child_pedestrian": 10.0,
    "pedestrian": 10.0,
    "cyclist": 8.0,
    "animal": 6.0,
    "car": 5.0,
    "emergency_vehicle": 5.0,
    "car_door": 3.0,
    "ball": 2.0,
    "luggage": 2.0,
    "shopping_cart": 2.0,
    "barrel": 2.0,
    "static_obstacle": 2.0,
    "billboard": 0.5,
    "stop_sign": 0.5,
    "yield_sign": 0.5,
    "traffic_light": 0.5,
    "parking_sign": 0.5,
    "turn_sign": 0.5,
}
