"""Synthetic four-leg intersection scenarios, conflict oracle, and rendering."""

from .geometry import IntersectionGeometry, Leg, Movement, default_geometry
from .vehicles import FOOTPRINTS, Vehicle, VehicleClass
from .trajectory import Trajectory, predict_trajectory
from .oracle import OracleParams, conflict_oracle
from .scenario import Scenario, read_scenarios, write_scenarios
from .generator import GeneratorConfig, sample_scenario
from .render import render_frames

__all__ = [
    "IntersectionGeometry",
    "Leg",
    "Movement",
    "default_geometry",
    "FOOTPRINTS",
    "Vehicle",
    "VehicleClass",
    "Trajectory",
    "predict_trajectory",
    "OracleParams",
    "conflict_oracle",
    "Scenario",
    "read_scenarios",
    "write_scenarios",
    "GeneratorConfig",
    "sample_scenario",
    "render_frames",
]
