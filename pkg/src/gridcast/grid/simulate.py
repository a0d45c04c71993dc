"""Quasi-steady-state DC simulation with overload-triggered line trips."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .loads import LoadProfile
from .powerflow import DCSolver
from .sensors import SensorPlacement
from .topology import GridTopology

CHANNELS = ("vm", "va", "p", "q")
DEFAULT_NOISE = (1e-3, 5e-4, 2e-3, 2e-3)


@dataclass(frozen=True)
class EventRecord:
    line: int
    overload_start: int
    trip_time: int

    def __post_init__(self):
        if not self.overload_start < self.trip_time:
            raise ValueError("overload_start must precede trip_time")

    def to_dict(self) -> dict:
        return {"line": self.line, "overload_start": self.overload_start, "trip_time": self.trip_time}


@dataclass(frozen=True)
class GridState:
    """Full per-slot network state, kept for replay checks.

    ``flows`` is NaN for lines that have already tripped.
    """

    injections: np.ndarray
    angles: np.ndarray
    flows: np.ndarray
    reactive: np.ndarray | None = None


@dataclass(frozen=True)
class SimulationTrace:
    measurements: np.ndarray  # (slots, sensors, 4), channel order CHANNELS
    sensor_buses: tuple[int, ...]
    events: tuple[EventRecord, ...]
    seed: int
    candidate_lines: tuple[int, ...]
    slot_seconds: float = 1.0
    truncated: bool = False
    state: GridState | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = self.measurements
        if m.ndim != 3 or m.shape[1] != len(self.sensor_buses) or m.shape[2] != len(CHANNELS):
            raise ValueError("measurements must be (slots, sensors, 4)")
        if not np.isfinite(m).all():
            raise ValueError("measurement array must be dense and finite")
        for ev in self.events:
            if ev.line not in self.candidate_lines:
                raise ValueError(f"event on non-candidate line {ev.line}")
            if not 0 <= ev.overload_start < ev.trip_time < self.n_slots:
                raise ValueError("event outside the trace time range")

    @property
    def n_slots(self) -> int:
        return self.measurements.shape[0]

    @property
    def feature_order(self) -> list[tuple[int, str]]:
        return [(b, ch) for b in self.sensor_buses for ch in CHANNELS]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "bus", *CHANNELS])
        for t in range(self.n_slots):
            for s, bus in enumerate(self.sensor_buses):
                w.writerow([t, bus, *(repr(float(v)) for v in self.measurements[t, s])])
        return buf.getvalue()

    def events_json(self) -> str:
        return json.dumps([ev.to_dict() for ev in self.events], indent=2)


def read_trace(csv_path: str | Path, events_path: str | Path, candidate_lines, seed: int = 0,
               slot_seconds: float = 1.0) -> SimulationTrace:
    rows = list(csv.DictReader(Path(csv_path).read_text().splitlines()))
    if not rows or list(rows[0].keys()) != ["slot", "bus", *CHANNELS]:
        raise ValueError("trace CSV must have header slot,bus,vm,va,p,q")
    buses = sorted({int(r["bus"]) for r in rows})
    n_slots = max(int(r["slot"]) for r in rows) + 1
    if len(rows) != n_slots * len(buses):
        raise ValueError("trace CSV has gaps: expected one row per sensor bus per slot")
    col = {b: i for i, b in enumerate(buses)}
    m = np.full((n_slots, len(buses), len(CHANNELS)), np.nan)
    for r in rows:
        m[int(r["slot"]), col[int(r["bus"])]] = [float(r[ch]) for ch in CHANNELS]
    events = tuple(EventRecord(**e) for e in json.loads(Path(events_path).read_text()))
    return SimulationTrace(m, tuple(buses), events, seed, tuple(candidate_lines), slot_seconds)


def _run_lengths(over: np.ndarray, carry: np.ndarray) -> np.ndarray:
    """Consecutive-True counts per column, continuing from ``carry`` counts."""
    T = over.shape[0]
    if T == 0:
        return over.astype(int)
    idx = np.arange(1, T + 1)[:, None]
    last_false = np.maximum.accumulate(np.where(~over, idx, 0), axis=0)
    counts = idx - last_false
    counts = np.where(last_false == 0, counts + carry[None, :], counts)
    return counts


def simulate(
    topology: GridTopology,
    loads: LoadProfile,
    placement: SensorPlacement,
    trip_slots: int = 10,
    noise_std=DEFAULT_NOISE,
    seed: int = 0,
    vm_sensitivity: float = 0.05,
) -> SimulationTrace:
    """Run the grid slot by slot over ``loads`` and record sensor measurements.

    A candidate line whose |flow| exceeds its rating for ``trip_slots``
    consecutive slots trips at the last of them and is removed from the next
    slot on. A trip that splits the grid ends the trace at the trip slot with
    ``truncated=True``.
    """
    if loads.p.shape[1] != topology.n_buses:
        raise ValueError("load profile is not defined on this topology's buses")
    if trip_slots < 2:
        raise ValueError("trip_slots must be >= 2 (an event's overload starts before its trip)")
    T = loads.n_slots
    share = np.asarray(topology.gen_share, dtype=float)
    p_inj = share * loads.p.sum(axis=1, keepdims=True) - loads.p
    q_inj = share * loads.q.sum(axis=1, keepdims=True) - loads.q
    all_ids = topology.line_ids
    col_of = {lid: i for i, lid in enumerate(all_ids)}
    ratings = np.array([ln.rating for ln in topology.lines])

    injections = np.zeros((T, topology.n_buses))
    angles = np.zeros_like(injections)
    flows = np.full((T, len(all_ids)), np.nan)
    counters = {c: 0 for c in topology.candidate_lines}
    events: list[EventRecord] = []
    active = topology
    t0, end, truncated = 0, T, False
    while t0 < T:
        solver = DCSolver(active)
        P, th, fl = solver.solve(p_inj[t0:])
        cols = [col_of[lid] for lid in active.line_ids]
        live = [c for c in topology.candidate_lines if c in active.line_ids]
        pos = [active.line_ids.index(c) for c in live]
        over = np.abs(fl[:, pos]) > ratings[[col_of[c] for c in live]]
        runs = _run_lengths(over, np.array([counters[c] for c in live], dtype=int))
        hit = np.argwhere(runs >= trip_slots)
        stop = T if hit.size == 0 else t0 + int(hit[:, 0].min())
        n = stop - t0 if hit.size == 0 else stop - t0 + 1
        injections[t0:t0 + n] = P[:n]
        angles[t0:t0 + n] = th[:n]
        flows[t0:t0 + n, cols] = fl[:n]
        if hit.size == 0:
            break
        rel = stop - t0
        tripped = [live[j] for j in range(len(live)) if runs[rel, j] >= trip_slots]
        for c in tripped:
            events.append(EventRecord(c, stop - trip_slots + 1, stop))
        for j, c in enumerate(live):
            counters[c] = int(runs[rel, j])
        active = active.without_lines(tripped)
        if not active.is_connected():
            truncated, end = True, stop + 1
            break
        t0 = stop + 1

    injections, angles, flows = injections[:end], angles[:end], flows[:end]
    q_bal = q_inj[:end].copy()
    slack = topology.bus_index(topology.slack_bus)
    q_bal[:, slack] = -np.delete(q_bal, slack, axis=1).sum(axis=1)
    state = GridState(injections, angles, flows, q_bal)
    return SimulationTrace(
        measurements=measure(state, topology, placement, noise_std, seed, vm_sensitivity),
        sensor_buses=tuple(placement.sensor_buses),
        events=tuple(events),
        seed=seed,
        candidate_lines=tuple(topology.candidate_lines),
        slot_seconds=loads.slot_seconds,
        truncated=truncated,
        state=state,
    )


def measure(state: GridState, topology: GridTopology, placement: SensorPlacement, noise_std=DEFAULT_NOISE,
            seed: int = 0, vm_sensitivity: float = 0.05) -> np.ndarray:
    """Sensor readings ``(slots, sensors, 4)`` of a network state, with Gaussian noise per channel."""
    noise_std = np.broadcast_to(np.asarray(noise_std, dtype=float), (len(CHANNELS),))
    idx = [topology.bus_index(b) for b in placement.sensor_buses]
    rng = np.random.default_rng(seed)
    p_s = state.injections[:, idx]
    meas = np.stack([1.0 + vm_sensitivity * p_s, state.angles[:, idx], p_s, state.reactive[:, idx]], axis=-1)
    return meas + rng.normal(size=meas.shape) * noise_std


def observe(trace: SimulationTrace, topology: GridTopology, placement: SensorPlacement, seed: int,
            noise_std=DEFAULT_NOISE, vm_sensitivity: float = 0.05) -> SimulationTrace:
    """Re-measure a simulated trace with another sensor placement.

    Equal to rerunning :func:`simulate` with that placement and seed, since
    the network state does not depend on where the sensors sit.
    """
    if trace.state is None:
        raise ValueError("trace carries no network state to observe")
    meas = measure(trace.state, topology, placement, noise_std, seed, vm_sensitivity)
    return replace(trace, measurements=meas, sensor_buses=tuple(placement.sensor_buses), seed=seed)


def simulate_days(topology, loads: LoadProfile, placement, seed: int, **kwargs) -> list[SimulationTrace]:
    """Simulate each day as its own trace; tripped lines are restored overnight."""
    spd = loads.slots_per_day
    n_days = max(1, loads.n_slots // spd)
    seeds = np.random.SeedSequence(seed).generate_state(n_days)
    return [
        simulate(topology, loads.day_slice(d), placement, seed=int(seeds[d]), **kwargs)
        for d in range(n_days)
    ]


def observe_days(traces: list[SimulationTrace], topology, placement, seed: int, **kwargs) -> list[SimulationTrace]:
    """:func:`observe` applied to the output of :func:`simulate_days`, with the same per-day seeds."""
    seeds = np.random.SeedSequence(seed).generate_state(len(traces))
    return [observe(tr, topology, placement, int(s), **kwargs) for tr, s in zip(traces, seeds)]
