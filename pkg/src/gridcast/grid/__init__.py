from .loads import LoadProfile, StressDay, generate_loads
from .powerflow import DCSolver, DisconnectedGridError, dc_power_flow
from .sensors import SensorPlacement, place_sensors
from .simulate import (CHANNELS, EventRecord, SimulationTrace, measure, observe, observe_days, read_trace,
                       simulate, simulate_days)
from .topology import CaseError, GridTopology, Line, load_case, parse_case

__all__ = [
    "CHANNELS",
    "CaseError",
    "DCSolver",
    "DisconnectedGridError",
    "EventRecord",
    "GridTopology",
    "Line",
    "LoadProfile",
    "SensorPlacement",
    "SimulationTrace",
    "StressDay",
    "dc_power_flow",
    "generate_loads",
    "load_case",
    "measure",
    "observe",
    "observe_days",
    "parse_case",
    "place_sensors",
    "read_trace",
    "simulate",
    "simulate_days",
]
