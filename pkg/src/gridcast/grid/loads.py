"""Synthetic diurnal demand with optional stress days."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .powerflow import load_sensitivities
from .topology import GridTopology

SECONDS_PER_DAY = 86400.0
PEAK_HOUR = 17.0


@dataclass(frozen=True)
class StressDay:
    day: int
    lines: tuple[int, ...]
    factors: tuple[float, ...]


@dataclass(frozen=True)
class LoadProfile:
    """Per-bus active/reactive demand, shape ``(n_slots, n_buses)``, pu."""

    p: np.ndarray
    q: np.ndarray
    slot_seconds: float
    stress_days: tuple[StressDay, ...] = field(default=())

    def __post_init__(self):
        if self.p.shape != self.q.shape or self.p.ndim != 2:
            raise ValueError("active and reactive demand must share a (slots, buses) shape")
        if (self.p < 0).any() or (self.q < 0).any():
            raise ValueError("demands must be >= 0")

    @property
    def n_slots(self) -> int:
        return self.p.shape[0]

    @property
    def slots_per_day(self) -> int:
        return int(round(SECONDS_PER_DAY / self.slot_seconds))

    def hours(self) -> np.ndarray:
        return (np.arange(self.n_slots) * self.slot_seconds / 3600.0) % 24.0

    def day_slice(self, day: int) -> "LoadProfile":
        spd = self.slots_per_day
        sl = slice(day * spd, (day + 1) * spd)
        stress = tuple(StressDay(0, s.lines, s.factors) for s in self.stress_days if s.day == day)
        return LoadProfile(self.p[sl], self.q[sl], self.slot_seconds, stress)


def daily_shape(hours: np.ndarray, trough: float = 0.55) -> np.ndarray:
    """Raised cosine over 24 h, 1.0 at 17:00 and ``trough`` at 05:00."""
    return trough + (1.0 - trough) * 0.5 * (1.0 + np.cos(2.0 * np.pi * (hours - PEAK_HOUR) / 24.0))


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stress_buses(topology: GridTopology, line_id: int) -> list[int]:
    """Load-side bus of a candidate line, the one stress days inflate.

    Candidate lines are oriented from supply to load in case files.
    """
    bus = topology.line(line_id).to_bus
    if topology.base_pd[topology.bus_index(bus)] > 0 and bus != topology.slack_bus:
        return [bus]
    return []


def generate_loads(
    topology: GridTopology,
    days: int,
    seed: int,
    slot_seconds: float = 1.0,
    stress_fraction: float = 0.0,
    stress_overload: tuple[float, float] = (1.4, 1.8),
    stress_onset_hours: tuple[float, float] = (10.0, 14.0),
    stress_ramp_hours: float = 3.0,
    multi_prob: float = 0.25,
    trough: float = 0.55,
    scale_sigma: float = 0.05,
    scale_clip: tuple[float, float] = (0.9, 1.1),
    noise: float = 0.01,
) -> LoadProfile:
    """Daily demand per bus: base x raised-cosine shape x per-bus/day scale x slot noise.

    On ``stress_fraction`` of the days (rounded half-up) the load-side bus of
    one randomly chosen candidate line, or two with probability
    ``multi_prob``, surges: from an onset hour drawn from
    ``stress_onset_hours`` its demand ramps linearly over ``stress_ramp_hours``
    up to a factor that holds for the rest of the day. The factor is solved
    per line so that the line's nominal peak flow reaches a ratio drawn from
    ``stress_overload`` times its rating. Per-bus scales are
    log-normal and clipped, slot noise is clipped at 3 sigma, so the normal-day
    demand is bounded by ``base * scale_clip[1] * (1 + 3 * noise)``.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if not 0.0 <= stress_fraction <= 1.0:
        raise ValueError("stress_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    spd = int(round(SECONDS_PER_DAY / slot_seconds))
    n = topology.n_buses
    base_p = np.asarray(topology.base_pd, dtype=float)
    base_q = np.asarray(topology.base_qd, dtype=float)
    hours = (np.arange(spd) * slot_seconds / 3600.0) % 24.0
    shape = daily_shape(hours, trough)

    n_stress = round_half_up(stress_fraction * days)
    stressed = set(rng.choice(days, size=n_stress, replace=False).tolist()) if n_stress else set()
    cands = list(topology.candidate_lines)
    if n_stress and cands:
        sens = load_sensitivities(topology)
        nominal = sens @ base_p

    p = np.empty((days * spd, n))
    stress_log = []
    for d in range(days):
        scale = np.clip(rng.lognormal(0.0, scale_sigma, size=n), *scale_clip)
        eps = np.clip(rng.normal(0.0, noise, size=(spd, n)), -3 * noise, 3 * noise)
        day = base_p * scale * shape[:, None] * (1.0 + eps)
        if d in stressed and cands:
            k = 2 if (len(cands) > 1 and rng.random() < multi_prob) else 1
            chosen = sorted(rng.choice(len(cands), size=k, replace=False).tolist())
            lines = tuple(cands[i] for i in chosen)
            factors = []
            for ln in lines:
                ratio = rng.uniform(*stress_overload)
                onset = rng.uniform(*stress_onset_hours)
                ramp = np.clip((hours - onset) / stress_ramp_hours, 0.0, 1.0)
                factor = 1.0
                for b in stress_buses(topology, ln):
                    r, i = topology.line_ids.index(ln), topology.bus_index(b)
                    push = sens[r, i] * base_p[i] * np.sign(nominal[r])
                    if push > 0:
                        factor = max(1.0, 1.0 + (ratio * topology.line(ln).rating - abs(nominal[r])) / push)
                    day[:, i] *= 1.0 + (factor - 1.0) * ramp
                factors.append(float(factor))
            stress_log.append(StressDay(d, lines, tuple(factors)))
        p[d * spd:(d + 1) * spd] = day
    ratio = np.divide(base_q, base_p, out=np.zeros(n), where=base_p > 0)
    return LoadProfile(p, p * ratio, float(slot_seconds), tuple(stress_log))


def demand_envelope(topology: GridTopology, trough: float = 0.55, scale_clip=(0.9, 1.1), noise: float = 0.01):
    """Per-bus (low, high) demand bounds on a normal day under the given load-generator settings."""
    base = np.asarray(topology.base_pd, dtype=float)
    low = base * trough * scale_clip[0] * (1 - 3 * noise)
    high = base * scale_clip[1] * (1 + 3 * noise)
    return low, high
