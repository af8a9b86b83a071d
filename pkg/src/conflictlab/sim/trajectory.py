"""Constant-speed trajectory prediction along route centerlines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OffRoute

__all__ = ["Trajectory", "predict_trajectory", "zone_entry_arclength", "stop_arclength"]

# Extra clearance, beyond half the vehicle length, that a yielding vehicle
# keeps between its nose and the conflict-zone boundary when it stops.
YIELD_SETBACK = 1.0


@dataclass(frozen=True)
class Trajectory:
    """Sampled motion of one vehicle: arrays of time, position, heading.

    Samples are uniform in time (``dt`` apart) over ``[0, horizon]``.
    ``arclength`` is the distance travelled along the route at each sample,
    which for a non-yielding mover grows exactly at ``speed * dt`` per step.
    """

    vehicle_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    arclength: np.ndarray
    dt: float
    horizon: float

    def __post_init__(self):
        n = self.t.shape[0]
        for arr in (self.x, self.y, self.heading, self.arclength):
            if arr.shape[0] != n:
                raise ValueError("trajectory arrays must share one length")

    @property
    def samples(self):
        return list(zip(self.t, self.x, self.y, self.heading))

    def __len__(self):
        return self.t.shape[0]


def zone_entry_arclength(path, geometry):
    """Arc length at which a route's centerline enters the conflict zone."""
    return path.first_s_in_rect(geometry.zone_half, geometry.zone_half)


def stop_arclength(path, geometry, vehicle):
    """Where a yielding vehicle halts: nose held short of the zone boundary."""
    entry = zone_entry_arclength(path, geometry)
    if entry is None:
        return path.length
    length, _ = vehicle.footprint
    return max(entry - (length / 2.0 + YIELD_SETBACK), 0.0)


def _resolve_path(vehicle, geometry):
    """Pick the route path a pose lies on, trying both main through lanes."""
    if geometry.is_main(vehicle.approach_leg) and vehicle.movement.value == "straight":
        lanes = (0, 1)
    else:
        lanes = (0,)
    best = None
    for lane in lanes:
        path = geometry.route_path(vehicle.approach_leg, vehicle.movement, lane)
        s, dist = path.project(vehicle.x, vehicle.y)
        if best is None or dist < best[2]:
            best = (path, s, dist)
    path, s, dist = best
    if dist > geometry.lane_width:
        raise OffRoute(
            f"vehicle {vehicle.id!r} is {dist:.2f} m from its route centerline"
        )
    return path, s


def predict_trajectory(vehicle, geometry, horizon=6.0, dt=0.1):
    """Predict a vehicle's motion over ``[0, horizon]`` at ``dt`` steps.

    Parked vehicles stay put.  Yielding vehicles run at constant speed until
    their stop point short of the conflict zone, then hold.  Everyone else
    moves at constant speed along their route, so consecutive samples are
    exactly ``speed * dt`` apart in arc length.
    """
    if dt <= 0.0 or horizon <= 0.0:
        raise ValueError("horizon and dt must be positive")
    n = int(round(horizon / dt)) + 1
    t = np.arange(n, dtype=np.float64) * dt

    if vehicle.parked:
        const = np.full(n, 0.0)
        return Trajectory(
            vehicle_id=vehicle.id,
            t=t,
            x=np.full(n, vehicle.x),
            y=np.full(n, vehicle.y),
            heading=np.full(n, vehicle.heading),
            arclength=const,
            dt=dt,
            horizon=horizon,
        )

    path, s0 = _resolve_path(vehicle, geometry)
    s = s0 + vehicle.speed * t
    if vehicle.yields:
        s = np.minimum(s, stop_arclength(path, geometry, vehicle))
    s = np.minimum(s, path.length)
    x, y, heading = path.sample(s)
    return Trajectory(
        vehicle_id=vehicle.id,
        t=t,
        x=x,
        y=y,
        heading=heading,
        arclength=s - s0,
        dt=dt,
        horizon=horizon,
    )
