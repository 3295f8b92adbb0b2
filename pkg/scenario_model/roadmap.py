# scenario_model/roadmap.py
"""
Geometry helpers over a RoadMap: drivable-area containment and lane polylines.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from matplotlib.path import Path

from scenario_model.types import Lane, RoadMap


# Points on a polygon edge count as drivable. The sign of the radius that
# grows a path depends on its winding, so both are tried.
EDGE_TOLERANCE = 1e-6


def drivable_paths(road_map: RoadMap) -> List[Path]:
    """Paths of the drivable polygons; polygons under three vertices enclose nothing"""
    return [Path(np.asarray(poly, dtype=float)) for poly in road_map.drivable if len(poly) >= 3]


def on_drivable(paths: Sequence[Path], x: float, y: float) -> bool:
    return any(
        p.contains_point((x, y), radius=EDGE_TOLERANCE) or p.contains_point((x, y), radius=-EDGE_TOLERANCE)
        for p in paths
    )


def points_on_drivable(paths: Sequence[Path], points: np.ndarray) -> np.ndarray:
    """Vectorized containment for an (N, 2) array of points, edges included"""
    inside = np.zeros(len(points), dtype=bool)
    for p in paths:
        inside |= p.contains_points(points, radius=EDGE_TOLERANCE)
        inside |= p.contains_points(points, radius=-EDGE_TOLERANCE)
    return inside


def lane_travel_points(lane: Lane) -> np.ndarray:
    """Centerline points in the order a vehicle travels them"""
    pts = np.asarray(lane.centerline, dtype=float)
    return pts if lane.forward else pts[::-1].copy()


@dataclass(frozen=True)
class LaneProjection:
    s: float            # arc length of the closest point, from the lane start
    lateral: float      # signed offset, positive to the left of travel
    heading: float      # travel heading of the closest segment
    length: float       # total lane length
    distance: float     # unsigned distance to the centerline


def project_onto_lane(points: np.ndarray, x: float, y: float) -> LaneProjection:
    starts = points[:-1]
    seg = points[1:] - starts
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    seg_len = np.where(seg_len == 0.0, 1e-12, seg_len)
    rel = np.array([x, y]) - starts
    t = np.clip((rel[:, 0] * seg[:, 0] + rel[:, 1] * seg[:, 1]) / (seg_len ** 2), 0.0, 1.0)
    closest = starts + seg * t[:, None]
    d = np.hypot(closest[:, 0] - x, closest[:, 1] - y)
    i = int(np.argmin(d))
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    s = float(cum[i] + t[i] * seg_len[i])
    cross = seg[i, 0] * rel[i, 1] - seg[i, 1] * rel[i, 0]
    lateral = float(math.copysign(d[i], cross)) if d[i] > 0 else 0.0
    heading = math.atan2(seg[i, 1], seg[i, 0])
    return LaneProjection(s=s, lateral=lateral, heading=heading, length=float(cum[-1]), distance=float(d[i]))


def point_along(points: np.ndarray, s: float) -> Tuple[float, float, float]:
    """Position and heading at arc length s, clamped to the polyline ends"""
    seg = points[1:] - points[:-1]
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    s = min(max(s, 0.0), float(cum[-1]))
    i = int(np.searchsorted(cum, s, side="right") - 1)
    i = min(max(i, 0), len(seg) - 1)
    frac = 0.0 if seg_len[i] == 0 else (s - cum[i]) / seg_len[i]
    x, y = points[i] + seg[i] * frac
    return float(x), float(y), math.atan2(seg[i, 1], seg[i, 0])


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]"""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
