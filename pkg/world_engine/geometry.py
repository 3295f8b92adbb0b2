# world_engine/geometry.py
"""
2D oriented boxes: separating-axis overlap, penetration depth and
ray / segment intersection (slab method in the box frame).
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class OrientedBox:
    cx: float
    cy: float
    half_length: float
    half_width: float
    heading: float

    @classmethod
    def from_pose(cls, x: float, y: float, heading: float, length: float, width: float) -> "OrientedBox":
        return cls(x, y, 0.5 * length, 0.5 * width, heading)

    def axes(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return (c, s), (-s, c)

    @property
    def bounding_radius(self) -> float:
        return math.hypot(self.half_length, self.half_width)

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of (N, 2) points inside or on the box"""
        c, s = math.cos(self.heading), math.sin(self.heading)
        rx = points[:, 0] - self.cx
        ry = points[:, 1] - self.cy
        lx = c * rx + s * ry
        ly = -s * rx + c * ry
        return (np.abs(lx) <= self.half_length) & (np.abs(ly) <= self.half_width)


def _axis_overlaps(a: OrientedBox, b: OrientedBox) -> Tuple[float, ...]:
    dx, dy = b.cx - a.cx, b.cy - a.cy
    a_axes, b_axes = a.axes(), b.axes()
    out = []
    for nx_, ny_ in a_axes + b_axes:
        ra = a.half_length * abs(a_axes[0][0] * nx_ + a_axes[0][1] * ny_) \
            + a.half_width * abs(a_axes[1][0] * nx_ + a_axes[1][1] * ny_)
        rb = b.half_length * abs(b_axes[0][0] * nx_ + b_axes[0][1] * ny_) \
            + b.half_width * abs(b_axes[1][0] * nx_ + b_axes[1][1] * ny_)
        out.append(ra + rb - abs(dx * nx_ + dy * ny_))
    return tuple(out)


def obb_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """True iff the boxes intersect; touching boundaries count as overlap"""
    return all(o >= 0.0 for o in _axis_overlaps(a, b))


def penetration_depth(a: OrientedBox, b: OrientedBox) -> float:
    """Smallest overlap over the four candidate axes; 0 when separated"""
    return max(0.0, min(_axis_overlaps(a, b)))


def _box_arrays(boxes: Sequence[OrientedBox]):
    centers = np.array([[b.cx, b.cy] for b in boxes], dtype=float)
    half = np.array([[b.half_length, b.half_width] for b in boxes], dtype=float)
    headings = np.array([b.heading for b in boxes], dtype=float)
    return centers, half, np.cos(headings), np.sin(headings)


def _slab(origin: np.ndarray, directions: np.ndarray, boxes: Sequence[OrientedBox]):
    """Entry/exit ray parameters of shape (rays, boxes), with a miss mask"""
    centers, half, cos_h, sin_h = _box_arrays(boxes)
    rel = origin[None, :] - centers
    ox = cos_h * rel[:, 0] + sin_h * rel[:, 1]
    oy = -sin_h * rel[:, 0] + cos_h * rel[:, 1]
    dx = directions[:, 0:1] * cos_h + directions[:, 1:2] * sin_h
    dy = -directions[:, 0:1] * sin_h + directions[:, 1:2] * cos_h

    shape = dx.shape
    t_near = np.full(shape, -np.inf)
    t_far = np.full(shape, np.inf)
    miss = np.zeros(shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for o, d, h in ((ox, dx, half[:, 0]), (oy, dy, half[:, 1])):
            parallel = np.abs(d) < 1e-12
            t1 = (-h - o) / d
            t2 = (h - o) / d
            lo = np.where(parallel, -np.inf, np.minimum(t1, t2))
            hi = np.where(parallel, np.inf, np.maximum(t1, t2))
            miss |= parallel & (np.abs(o) > h)
            t_near = np.maximum(t_near, lo)
            t_far = np.minimum(t_far, hi)
    return t_near, t_far, miss


def ray_box_distances(origin: Tuple[float, float], directions: np.ndarray,
                      boxes: Sequence[OrientedBox]) -> np.ndarray:
    """
    Distance along each unit direction to the nearest box, inf on a miss.
    A ray starting inside a box reports 0.
    """
    directions = np.asarray(directions, dtype=float)
    if not boxes:
        return np.full(len(directions), np.inf)
    t_near, t_far, miss = _slab(np.asarray(origin, dtype=float), directions, boxes)
    entry = np.maximum(t_near, 0.0)
    hit = ~miss & (t_far >= entry)
    return np.where(hit, entry, np.inf).min(axis=1)


def segment_hits_any(p0: Tuple[float, float], p1: Tuple[float, float], boxes: Sequence[OrientedBox]) -> bool:
    if not boxes:
        return False
    d = np.array([[p1[0] - p0[0], p1[1] - p0[1]]], dtype=float)
    t_near, t_far, miss = _slab(np.asarray(p0, dtype=float), d, boxes)
    entry = np.maximum(t_near[0], 0.0)
    return bool(np.any(~miss[0] & (t_far[0] >= entry) & (entry <= 1.0)))
