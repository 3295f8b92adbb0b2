# scenario_dsl/maps.py
"""
Road map templates.
A scenario file may write `map: {template: <name>, ...params}` instead of a
full map; the parser expands it here and the serializer always writes the
expanded form.
"""

import math
from typing import Any, Callable, Dict, List, Tuple

from scenario_model.types import Lane, Pose2D, RoadMap

TRAFFIC_ANCHOR_SPACING = 20.0
ROAD_MARGIN = 20.0
JUNCTION_ARM = 100.0
MAX_TEMPLATE_PARAMETER = 5000.0


class TemplateError(ValueError):
    """Unknown template or bad template parameter"""


def _rect(x_min: float, y_min: float, x_max: float, y_max: float) -> Tuple[Tuple[float, float], ...]:
    return ((x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max))


def _pose(x: float, y: float, heading: float = 0.0) -> Pose2D:
    return Pose2D(x=float(x), y=float(y), heading=float(heading))


def _traffic_anchors(prefix: str, y: float, length: float, forward: bool) -> Dict[str, Pose2D]:
    anchors = {}
    count = int(length // TRAFFIC_ANCHOR_SPACING) + 1
    for k in range(count):
        x = k * TRAFFIC_ANCHOR_SPACING
        anchors[f"traffic_{prefix}{k:02d}"] = _pose(x, y, 0.0 if forward else math.pi)
    return anchors


def _straight_lane(lane_id: str, y: float, length: float, limit: float, forward: bool = True,
                   one_way: bool = False) -> Lane:
    return Lane(
        id=lane_id,
        centerline=((-ROAD_MARGIN, y), (length + ROAD_MARGIN, y)),
        forward=forward,
        speed_limit=limit,
        one_way=one_way,
    )


def urban_two_lane(length: float = 200.0, speed_limit: float = 10.0) -> RoadMap:
    anchors = {
        "east_start": _pose(0.0, -1.75),
        "west_start": _pose(length, 1.75, math.pi),
    }
    anchors.update(_traffic_anchors("e", -1.75, length, True))
    anchors.update(_traffic_anchors("w", 1.75, length, False))
    return RoadMap(
        name="urban-two-lane",
        drivable=(_rect(-ROAD_MARGIN, -3.5, length + ROAD_MARGIN, 3.5),),
        lanes=(
            _straight_lane("east", -1.75, length, speed_limit),
            _straight_lane("west", 1.75, length, speed_limit, forward=False),
        ),
        spawn_anchors=anchors,
    )


def urban_parking_street(length: float = 200.0, speed_limit: float = 10.0) -> RoadMap:
    """Two lanes plus a parking strip on the south side (y in [-6, -3.5])"""
    base = urban_two_lane(length, speed_limit)
    return base.model_copy(update={
        "name": "urban-parking-street",
        "drivable": (_rect(-ROAD_MARGIN, -6.0, length + ROAD_MARGIN, 3.5),),
    })


def one_way_street(length: float = 200.0, speed_limit: float = 10.0) -> RoadMap:
    anchors = {
        "main_start": _pose(0.0, 0.0),
        "main_end": _pose(length, 0.0, math.pi),
    }
    anchors.update(_traffic_anchors("m", 0.0, length, True))
    return RoadMap(
        name="one-way-street",
        drivable=(_rect(-ROAD_MARGIN, -3.0, length + ROAD_MARGIN, 3.0),),
        lanes=(_straight_lane("main", 0.0, length, speed_limit, one_way=True),),
        spawn_anchors=anchors,
    )


def multi_lane_avenue(length: float = 250.0, speed_limit: float = 14.0) -> RoadMap:
    anchors = {
        "east_start": _pose(0.0, -1.75),
        "east2_start": _pose(0.0, -5.25),
        "west_start": _pose(length, 1.75, math.pi),
    }
    anchors.update(_traffic_anchors("e", -1.75, length, True))
    anchors.update(_traffic_anchors("f", -5.25, length, True))
    anchors.update(_traffic_anchors("w", 1.75, length, False))
    return RoadMap(
        name="multi-lane-avenue",
        drivable=(_rect(-ROAD_MARGIN, -7.0, length + ROAD_MARGIN, 3.5),),
        lanes=(
            _straight_lane("east_1", -1.75, length, speed_limit),
            _straight_lane("east_2", -5.25, length, speed_limit),
            _straight_lane("west", 1.75, length, speed_limit, forward=False),
        ),
        spawn_anchors=anchors,
    )


def highway(length: float = 400.0, speed_limit: float = 25.0) -> RoadMap:
    """Single carriageway of two eastbound lanes; the median lies north of y = 0"""
    anchors = {
        "left_start": _pose(0.0, -1.75),
        "right_start": _pose(0.0, -5.25),
    }
    anchors.update(_traffic_anchors("l", -1.75, length, True))
    anchors.update(_traffic_anchors("r", -5.25, length, True))
    return RoadMap(
        name="highway",
        drivable=(_rect(-ROAD_MARGIN, -7.0, length + ROAD_MARGIN, 0.0),),
        lanes=(
            _straight_lane("left", -1.75, length, speed_limit, one_way=True),
            _straight_lane("right", -5.25, length, speed_limit, one_way=True),
        ),
        spawn_anchors=anchors,
    )


def junction(speed_limit: float = 10.0) -> RoadMap:
    """Four-arm crossing centred on the origin; arms reach 100 m out"""
    a = JUNCTION_ARM
    half_pi = 0.5 * math.pi
    anchors = {
        "east_start": _pose(-80.0, -1.75),
        "west_start": _pose(80.0, 1.75, math.pi),
        "roundabout_exit": _pose(-1.75, 40.0, -half_pi),
        "hospital_exit": _pose(1.75, -40.0, half_pi),
    }
    for k, x in enumerate((-60.0, -40.0, 40.0, 60.0)):
        anchors[f"traffic_e{k:02d}"] = _pose(x, -1.75)
        anchors[f"traffic_w{k:02d}"] = _pose(-x, 1.75, math.pi)
        anchors[f"traffic_n{k:02d}"] = _pose(1.75, x, half_pi)
        anchors[f"traffic_s{k:02d}"] = _pose(-1.75, -x, -half_pi)
    return RoadMap(
        name="junction",
        drivable=(_rect(-a, -3.5, a, 3.5), _rect(-3.5, -a, 3.5, a)),
        lanes=(
            Lane(id="east", centerline=((-a, -1.75), (a, -1.75)), speed_limit=speed_limit),
            Lane(id="west", centerline=((-a, 1.75), (a, 1.75)), forward=False, speed_limit=speed_limit),
            Lane(id="north", centerline=((1.75, -a), (1.75, a)), speed_limit=speed_limit),
            Lane(id="south", centerline=((-1.75, -a), (-1.75, a)), forward=False, speed_limit=speed_limit),
        ),
        spawn_anchors=anchors,
    )


MAP_TEMPLATES: Dict[str, Callable[..., RoadMap]] = {
    "urban-two-lane": urban_two_lane,
    "urban-parking-street": urban_parking_street,
    "one-way-street": one_way_street,
    "multi-lane-avenue": multi_lane_avenue,
    "highway": highway,
    "junction": junction,
}


def template_names() -> List[str]:
    return sorted(MAP_TEMPLATES)


def expand_template(reference: Dict[str, Any]) -> RoadMap:
    """Build the RoadMap for a `{template: name, ...params}` mapping"""
    params = dict(reference)
    name = params.pop("template", None)
    if not isinstance(name, str) or name not in MAP_TEMPLATES:
        raise TemplateError(f"unknown map template '{name}' (known: {', '.join(template_names())})")
    factory = MAP_TEMPLATES[name]
    numbers = {}
    for key, value in params.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise TemplateError(f"template parameter '{key}' must be a number")
        try:
            value = numbers[key] = float(value)
        except OverflowError:
            raise TemplateError(f"template parameter '{key}' must be positive and finite") from None
        if not math.isfinite(value) or value <= 0.0:
            raise TemplateError(f"template parameter '{key}' must be positive and finite")
        if value > MAX_TEMPLATE_PARAMETER:
            raise TemplateError(f"template parameter '{key}' exceeds {MAX_TEMPLATE_PARAMETER:g}")
    try:
        return factory(**numbers)
    except TypeError:
        raise TemplateError(f"template '{name}' does not accept parameters {sorted(params)}") from None
