from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loads import round_half_up
from .topology import GridTopology


@dataclass(frozen=True)
class SensorPlacement:
    sensor_buses: tuple[int, ...]
    penetration: float


def sensor_count(n_buses: int, penetration: float) -> int:
    return max(1, round_half_up(penetration * n_buses))


def place_sensors(topology: GridTopology, penetration: float, seed: int) -> SensorPlacement:
    """Uniformly sample ``round(penetration * n_buses)`` buses (at least one)."""
    if not 0.0 < penetration <= 1.0:
        raise ValueError(f"penetration must lie in (0, 1], got {penetration}")
    rng = np.random.default_rng(seed)
    k = sensor_count(topology.n_buses, penetration)
    picked = rng.choice(topology.n_buses, size=k, replace=False)
    buses = tuple(sorted(topology.buses[i] for i in picked))
    return SensorPlacement(buses, float(penetration))
