"""Ground-truth conflict labelling for synthetic intersection scenes.

Two moving vehicles are in conflict when (a) their predicted swept footprints
claim at least one common cell of the conflict-zone grid, and (b) their
conflict-zone arrival times — the first trajectory sample whose centre lies
inside the zone — differ by less than the arrival-gap threshold.  The
conflict time of a pair is the later of the two arrivals.  Parked vehicles
are invisible to the oracle, and a vehicle that never reaches the zone
within the horizon (for example because it yields and stops short) can never
be part of a conflict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ConflictLabel
from .kernels import swept_occupancy
from .trajectory import predict_trajectory

__all__ = ["OracleParams", "conflict_oracle", "scene_analysis"]


@dataclass(frozen=True)
class OracleParams:
    """Tunable thresholds of the conflict rule.

    ``horizon``/``dt`` control trajectory prediction; ``gap_threshold`` is
    the maximum zone-arrival time difference (seconds) that still counts as
    a conflict; ``cell_size`` sets the occupancy-grid resolution.
    """

    horizon: float = 6.0
    dt: float = 0.1
    gap_threshold: float = 1.5
    cell_size: float = 0.5

    def __post_init__(self):
        if self.horizon <= 0.0 or self.dt <= 0.0:
            raise ValueError("horizon and dt must be positive")
        if self.gap_threshold <= 0.0:
            raise ValueError("gap_threshold must be positive")
        if self.cell_size <= 0.0:
            raise ValueError("cell_size must be positive")


def _zone_entry_time(traj, zone_half):
    inside = (np.abs(traj.x) <= zone_half) & (np.abs(traj.y) <= zone_half)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        return None
    return float(traj.t[int(hits[0])])


def scene_analysis(geometry, vehicles, params):
    """Per-vehicle oracle intermediates: trajectory, occupancy, zone arrival.

    Returns ``{vehicle_id: (trajectory, grid, entry_time)}`` for moving
    vehicles only.  Exposed so reports and rationale text can explain a
    label with the same numbers the oracle used.
    """
    analysis = {}
    for v in vehicles:
        if v.parked:
            continue
        traj = predict_trajectory(v, geometry, horizon=params.horizon, dt=params.dt)
        length, width = v.footprint
        grid = swept_occupancy(
            traj.x, traj.y, traj.heading,
            length / 2.0, width / 2.0,
            geometry.zone_half, params.cell_size,
        )
        entry = _zone_entry_time(traj, geometry.zone_half)
        analysis[v.id] = (traj, grid, entry)
    return analysis


def conflict_oracle(geometry, vehicles, params=None):
    """Label a scene and list its conflicting vehicle pairs.

    Returns ``(label, pairs)`` where ``pairs`` is a list of
    ``(vehicle_id_a, vehicle_id_b, conflict_time)`` sorted by conflict time
    (ties broken by the id pair).  ``label`` is CONFLICT iff any pair
    qualifies.  Symmetric in vehicle order by construction.
    """
    params = params or OracleParams()
    analysis = scene_analysis(geometry, vehicles, params)
    ids = sorted(analysis.keys())
    pairs = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = ids[i], ids[j]
            _, grid_a, entry_a = analysis[a]
            _, grid_b, entry_b = analysis[b]
            if entry_a is None or entry_b is None:
                continue
            if abs(entry_a - entry_b) >= params.gap_threshold:
                continue
            if not np.any(grid_a & grid_b):
                continue
            pairs.append((a, b, max(entry_a, entry_b)))
    pairs.sort(key=lambda p: (p[2], p[0], p[1]))
    label = ConflictLabel.CONFLICT if pairs else ConflictLabel.NO_CONFLICT
    return label, pairs
