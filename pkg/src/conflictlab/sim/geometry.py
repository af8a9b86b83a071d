"""Geometry of a four-leg unsignalized intersection and its route centerlines.

Coordinates are metric, x east, y north, origin at the intersection center.
The main road runs west-east and has priority; the sub road runs north-south.
Traffic keeps right.  Each main approach carries a dedicated left-turn lane
(innermost) plus two through lanes; each sub approach is a single shared lane.

Routes are polyline-plus-fillet centerlines: an approach segment, an optional
circular arc (for turns), and an exit segment.  Positions along a route are
addressed by arc length, which is what makes constant-speed kinematics exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

__all__ = [
    "Leg",
    "Movement",
    "IntersectionGeometry",
    "Path",
    "default_geometry",
]


class Leg(str, Enum):
    """Approach leg, named by the compass side the vehicle arrives from."""

    WEST = "west"
    EAST = "east"
    NORTH = "north"
    SOUTH = "south"


class Movement(str, Enum):
    LEFT = "left"
    STRAIGHT = "straight"
    RIGHT = "right"


# Unit travel direction of a vehicle entering from each leg.
_DIR = {
    Leg.WEST: (1.0, 0.0),
    Leg.EAST: (-1.0, 0.0),
    Leg.SOUTH: (0.0, 1.0),
    Leg.NORTH: (0.0, -1.0),
}

_MAIN_LEGS = (Leg.WEST, Leg.EAST)


def _right(d):
    """Unit normal pointing to the right of travel direction ``d``."""
    return (d[1], -d[0])


def _ccw(d):
    return (-d[1], d[0])


def _cw(d):
    return (d[1], -d[0])


@dataclass(frozen=True)
class _LineSeg:
    x0: float
    y0: float
    ux: float
    uy: float
    length: float

    def point(self, s):
        return self.x0 + self.ux * s, self.y0 + self.uy * s, math.atan2(self.uy, self.ux)

    def sample(self, s):
        x = self.x0 + self.ux * s
        y = self.y0 + self.uy * s
        h = np.full_like(s, math.atan2(self.uy, self.ux))
        return x, y, h

    def project(self, px, py):
        t = (px - self.x0) * self.ux + (py - self.y0) * self.uy
        t = min(max(t, 0.0), self.length)
        cx = self.x0 + self.ux * t
        cy = self.y0 + self.uy * t
        return t, math.hypot(px - cx, py - cy)


@dataclass(frozen=True)
class _ArcSeg:
    cx: float
    cy: float
    radius: float
    a0: float
    sweep: float  # signed; positive = counter-clockwise

    @property
    def length(self):
        return self.radius * abs(self.sweep)

    def _angle(self, s):
        return self.a0 + math.copysign(1.0, self.sweep) * s / self.radius

    def point(self, s):
        a = self._angle(s)
        x = self.cx + self.radius * math.cos(a)
        y = self.cy + self.radius * math.sin(a)
        h = a + math.copysign(math.pi / 2.0, self.sweep)
        return x, y, _wrap_angle(h)

    def sample(self, s):
        sign = math.copysign(1.0, self.sweep)
        a = self.a0 + sign * s / self.radius
        x = self.cx + self.radius * np.cos(a)
        y = self.cy + self.radius * np.sin(a)
        h = _wrap_angle_array(a + sign * math.pi / 2.0)
        return x, y, h

    def project(self, px, py):
        sign = math.copysign(1.0, self.sweep)
        a = math.atan2(py - self.cy, px - self.cx)
        delta = ((a - self.a0) * sign) % (2.0 * math.pi)
        if delta <= abs(self.sweep):
            candidates = (delta * self.radius,)
        else:
            candidates = (0.0, self.length)
        best_s, best_d = 0.0, float("inf")
        for s in candidates:
            x, y, _ = self.point(s)
            d = math.hypot(px - x, py - y)
            if d < best_d:
                best_s, best_d = s, d
        return best_s, best_d


def _wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _wrap_angle_array(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


class Path:
    """A route centerline: consecutive segments addressed by arc length."""

    def __init__(self, segments):
        self.segments = list(segments)
        self._cum = np.concatenate(
            [[0.0], np.cumsum([seg.length for seg in self.segments])]
        )
        self.length = float(self._cum[-1])
        self._rect_entry_memo = {}

    def point_at(self, s):
        """Position and heading at arc length ``s`` (clamped to the path)."""
        s = min(max(s, 0.0), self.length)
        idx = int(np.searchsorted(self._cum, s, side="right")) - 1
        idx = min(max(idx, 0), len(self.segments) - 1)
        return self.segments[idx].point(s - self._cum[idx])

    def sample(self, s):
        """Vectorised ``point_at`` over a numpy array of arc lengths."""
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.length)
        x = np.empty_like(s)
        y = np.empty_like(s)
        h = np.empty_like(s)
        idx = np.clip(
            np.searchsorted(self._cum, s, side="right") - 1, 0, len(self.segments) - 1
        )
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if not mask.any():
                continue
            sx, sy, sh = seg.sample(s[mask] - self._cum[i])
            x[mask] = sx
            y[mask] = sy
            h[mask] = sh
        return x, y, h

    def project(self, px, py):
        """Arc length and distance of the nearest point on the path."""
        best_s, best_d = 0.0, float("inf")
        for i, seg in enumerate(self.segments):
            s_local, d = seg.project(px, py)
            if d < best_d:
                best_s, best_d = self._cum[i] + s_local, d
        return best_s, best_d

    def first_s_in_rect(self, half_x, half_y):
        """Arc length where the path first enters the axis-aligned rectangle
        ``|x| <= half_x, |y| <= half_y``, or ``None`` if it never does.

        Found by a coarse scan refined with bisection, so it is exact to
        ~1e-9 m regardless of segment type.
        """
        key = (half_x, half_y)
        if key in self._rect_entry_memo:
            return self._rect_entry_memo[key]
        result = self._first_s_in_rect(half_x, half_y)
        self._rect_entry_memo[key] = result
        return result

    def _first_s_in_rect(self, half_x, half_y):
        step = 0.05
        n = int(self.length / step) + 2
        s_grid = np.minimum(np.arange(n) * step, self.length)
        x, y, _ = self.sample(s_grid)
        inside = (np.abs(x) <= half_x) & (np.abs(y) <= half_y)
        hits = np.flatnonzero(inside)
        if hits.size == 0:
            return None
        k = int(hits[0])
        if k == 0:
            return float(s_grid[0])
        lo, hi = float(s_grid[k - 1]), float(s_grid[k])
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            mx, my, _ = self.point_at(mid)
            if abs(mx) <= half_x and abs(my) <= half_y:
                hi = mid
            else:
                lo = mid
        return hi


@dataclass(frozen=True)
class IntersectionGeometry:
    """Parameters of the intersection layout.

    ``zone_size`` is the side of the square conflict zone centred on the
    intersection; lane offsets are derived from ``lane_width``.
    """

    zone_size: float = 30.0
    lane_width: float = 3.5
    left_turn_radius: float = 8.0
    right_turn_radius: float = 6.0
    view_half: float = 50.0
    approach_extent: float = 60.0
    exit_extent: float = 120.0

    def __post_init__(self):
        if self.zone_size <= 0.0 or self.lane_width <= 0.0:
            raise ValueError("zone_size and lane_width must be positive")
        if self.left_turn_radius <= 0.0 or self.right_turn_radius <= 0.0:
            raise ValueError("turn radii must be positive")
        if self.view_half < self.zone_size / 2.0:
            raise ValueError("view must contain the conflict zone")

    @property
    def zone_half(self):
        return self.zone_size / 2.0

    def is_main(self, leg):
        return leg in _MAIN_LEGS

    def priority(self, leg):
        return "main" if self.is_main(leg) else "sub"

    def lane_count(self, leg):
        """Approach lanes: through + dedicated turn lanes."""
        return 3 if self.is_main(leg) else 1

    def main_half_width(self):
        return 3.0 * self.lane_width

    def sub_half_width(self):
        return self.lane_width

    def approach_offset(self, leg, movement, lane=0):
        """Lateral offset (to the right of travel) of the approach lane centre.

        Main approaches: the innermost lane is the dedicated left-turn lane,
        then two through lanes; ``lane`` picks the through lane (0 = inner).
        Right turns use the outermost through lane.  Sub approaches have a
        single shared lane.
        """
        lw = self.lane_width
        if not self.is_main(leg):
            return 0.5 * lw
        if movement is Movement.LEFT:
            return 0.5 * lw
        if movement is Movement.RIGHT:
            return 2.5 * lw
        if lane not in (0, 1):
            raise ValueError("through lane index must be 0 or 1")
        return (1.5, 2.5)[lane] * lw

    def exit_offset(self, exit_dir, movement):
        """Lateral offset of the exit lane centre for a given exit direction."""
        lw = self.lane_width
        horizontal = exit_dir[1] == 0.0
        if not horizontal:
            return 0.5 * lw  # sub road: single lane
        return (1.5 if movement is Movement.LEFT else 2.5) * lw

    def route_path(self, leg, movement, lane=0):
        return _build_route(self, leg, movement, lane)

    def params(self):
        return {
            "zone_size": self.zone_size,
            "lane_width": self.lane_width,
            "left_turn_radius": self.left_turn_radius,
            "right_turn_radius": self.right_turn_radius,
            "view_half": self.view_half,
            "approach_extent": self.approach_extent,
            "exit_extent": self.exit_extent,
        }

    @classmethod
    def from_params(cls, params):
        return cls(**params)


@lru_cache(maxsize=256)
def _build_route_cached(geo_key, leg, movement, lane):
    geo = IntersectionGeometry(*geo_key)
    d = _DIR[leg]
    rd = _right(d)
    off_a = geo.approach_offset(leg, movement, lane)
    start = (-geo.approach_extent * d[0] + off_a * rd[0],
             -geo.approach_extent * d[1] + off_a * rd[1])

    if movement is Movement.STRAIGHT:
        total = geo.approach_extent + geo.exit_extent
        return Path([_LineSeg(start[0], start[1], d[0], d[1], total)])

    e = _ccw(d) if movement is Movement.LEFT else _cw(d)
    re = _right(e)
    off_e = geo.exit_offset(e, movement)
    # Intersection point of the approach and exit lane centerlines.
    denom = d[0] * re[0] + d[1] * re[1]
    sp = ((off_e * re[0] - off_a * rd[0]) * re[0]
          + (off_e * re[1] - off_a * rd[1]) * re[1]) / denom
    px = off_a * rd[0] + sp * d[0]
    py = off_a * rd[1] + sp * d[1]
    radius = geo.left_turn_radius if movement is Movement.LEFT else geo.right_turn_radius
    ax, ay = px - radius * d[0], py - radius * d[1]
    bx, by = px + radius * e[0], py + radius * e[1]
    n = _ccw(d) if movement is Movement.LEFT else _cw(d)
    cx, cy = ax + radius * n[0], ay + radius * n[1]
    a0 = math.atan2(ay - cy, ax - cx)
    a1 = math.atan2(by - cy, bx - cx)
    sweep = _wrap_angle(a1 - a0)
    if movement is Movement.LEFT and sweep < 0.0:
        sweep += 2.0 * math.pi
    if movement is Movement.RIGHT and sweep > 0.0:
        sweep -= 2.0 * math.pi

    approach_len = math.hypot(ax - start[0], ay - start[1])
    exit_end = (off_e * re[0] + geo.exit_extent * e[0],
                off_e * re[1] + geo.exit_extent * e[1])
    exit_len = math.hypot(exit_end[0] - bx, exit_end[1] - by)
    return Path([
        _LineSeg(start[0], start[1], d[0], d[1], approach_len),
        _ArcSeg(cx, cy, radius, a0, sweep),
        _LineSeg(bx, by, e[0], e[1], exit_len),
    ])


def _build_route(geo, leg, movement, lane):
    key = (
        geo.zone_size,
        geo.lane_width,
        geo.left_turn_radius,
        geo.right_turn_radius,
        geo.view_half,
        geo.approach_extent,
        geo.exit_extent,
    )
    if not geo.is_main(leg):
        lane = 0
    if movement is not Movement.STRAIGHT:
        lane = 0
    return _build_route_cached(key, leg, movement, lane)


def default_geometry():
    """The stock layout: 30 m conflict zone, 3.5 m lanes, R6/R8 fillets."""
    return IntersectionGeometry()
