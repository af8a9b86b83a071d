"""Scenario container and JSONL serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import IoFailure
from ..model import ConflictLabel
from .geometry import IntersectionGeometry
from .vehicles import Vehicle

__all__ = ["Scenario", "write_scenarios", "read_scenarios"]


@dataclass(frozen=True)
class Scenario:
    """A fully specified scene plus the oracle's verdict on it."""

    id: str
    seed: int
    geometry: IntersectionGeometry
    vehicles: tuple
    oracle_label: ConflictLabel
    conflict_pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ids = [v.id for v in self.vehicles]
        if len(set(ids)) != len(ids):
            raise ValueError("vehicle ids must be unique within a scenario")

    def to_record(self):
        return {
            "id": self.id,
            "seed": self.seed,
            "geometry": self.geometry.params(),
            "vehicles": [v.to_record() for v in self.vehicles],
            "oracle_label": self.oracle_label.wire,
            "conflict_pairs": [list(p) for p in self.conflict_pairs],
        }

    @classmethod
    def from_record(cls, rec):
        return cls(
            id=rec["id"],
            seed=rec["seed"],
            geometry=IntersectionGeometry.from_params(rec["geometry"]),
            vehicles=tuple(Vehicle.from_record(v) for v in rec["vehicles"]),
            oracle_label=ConflictLabel.from_wire(rec["oracle_label"]),
            conflict_pairs=tuple(
                (p[0], p[1], p[2]) for p in rec.get("conflict_pairs", [])
            ),
        )


def write_scenarios(path, scenarios):
    """Write scenarios as JSONL, one object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for sc in scenarios:
            fh.write(json.dumps(sc.to_record(), sort_keys=True) + "\n")


def read_scenarios(path):
    scenarios = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                scenarios.append(Scenario.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise IoFailure(f"bad scenario record at line {lineno}: {exc}") from exc
    return scenarios
