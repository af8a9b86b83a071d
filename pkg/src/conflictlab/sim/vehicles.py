"""Vehicle classes, footprints, and scene vehicle state."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import Leg, Movement

__all__ = ["VehicleClass", "FOOTPRINTS", "Vehicle"]


class VehicleClass(str, Enum):
    CAR = "car"
    VAN = "van"
    TRUCK = "truck"
    BUS = "bus"
    BIKE = "bike"
    MOTORCYCLE = "motorcycle"


# Footprint (length, width) in metres, centred on the pose.
FOOTPRINTS = {
    VehicleClass.CAR: (4.5, 1.8),
    VehicleClass.VAN: (5.0, 2.0),
    VehicleClass.TRUCK: (8.0, 2.5),
    VehicleClass.BUS: (11.0, 2.8),
    VehicleClass.BIKE: (1.8, 0.6),
    VehicleClass.MOTORCYCLE: (2.1, 0.8),
}


@dataclass(frozen=True)
class Vehicle:
    """A vehicle in a scene: pose, speed, and routing intent.

    ``parked`` vehicles are roadside scenery — stationary and ignored by
    conflict reasoning.  ``yields`` marks a vehicle that will stop at the
    conflict-zone boundary instead of entering (sub-road give-way behaviour).
    """

    id: str
    vclass: VehicleClass
    x: float
    y: float
    heading: float
    speed: float
    approach_leg: Leg = Leg.WEST
    movement: Movement = Movement.STRAIGHT
    parked: bool = False
    yields: bool = False

    def __post_init__(self):
        if self.parked:
            if self.speed != 0.0:
                raise ValueError("parked vehicles must have zero speed")
        elif self.speed <= 0.0:
            raise ValueError("moving vehicles need positive speed")
        if not math.isfinite(self.x) or not math.isfinite(self.y):
            raise ValueError("vehicle pose must be finite")

    @property
    def footprint(self):
        return FOOTPRINTS[self.vclass]

    def corners(self, x=None, y=None, heading=None):
        """Oriented-rectangle corner coordinates at the given (or own) pose."""
        x = self.x if x is None else x
        y = self.y if y is None else y
        heading = self.heading if heading is None else heading
        length, width = self.footprint
        hl, hw = length / 2.0, width / 2.0
        ch, sh = math.cos(heading), math.sin(heading)
        pts = []
        for du, dv in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)):
            pts.append((x + du * ch - dv * sh, y + du * sh + dv * ch))
        return pts

    def to_record(self):
        return {
            "id": self.id,
            "vclass": self.vclass.value,
            "x": self.x,
            "y": self.y,
            "heading": self.heading,
            "speed": self.speed,
            "approach_leg": self.approach_leg.value,
            "movement": self.movement.value,
            "parked": self.parked,
            "yields": self.yields,
        }

    @classmethod
    def from_record(cls, rec):
        return cls(
            id=rec["id"],
            vclass=VehicleClass(rec["vclass"]),
            x=rec["x"],
            y=rec["y"],
            heading=rec["heading"],
            speed=rec["speed"],
            approach_leg=Leg(rec["approach_leg"]),
            movement=Movement(rec["movement"]),
            parked=rec.get("parked", False),
            yields=rec.get("yields", False),
        )
