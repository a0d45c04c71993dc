"""Grid topology container and plain-text case file parser.

Case files hold one record per line, grouped under section headers::

    # comment
    BUS
    <id> <base_pd> <base_qd> <gen_share>
    LINE
    <id> <from_bus> <to_bus> <reactance> <rating>
    SLACK
    <bus id>
    CANDIDATE
    <line id>

All quantities are per-unit on a common base. ``gen_share`` is the fraction of
total demand dispatched at a bus; the slack bus balances whatever is left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

BUNDLED_CASES = ("toy5", "ieee30")


class CaseError(ValueError):
    """Raised for unknown, malformed or physically invalid case definitions."""


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    reactance: float
    rating: float


@dataclass(frozen=True)
class GridTopology:
    buses: tuple[int, ...]
    lines: tuple[Line, ...]
    slack_bus: int
    candidate_lines: tuple[int, ...]
    base_pd: tuple[float, ...] = ()
    base_qd: tuple[float, ...] = ()
    gen_share: tuple[float, ...] = ()
    name: str = "custom"
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.buses)
        for attr in ("base_pd", "base_qd", "gen_share"):
            if not getattr(self, attr):
                object.__setattr__(self, attr, (0.0,) * n)
        object.__setattr__(self, "_index", {b: i for i, b in enumerate(self.buses)})
        self.validate()

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def line_ids(self) -> tuple[int, ...]:
        return tuple(line.id for line in self.lines)

    def bus_index(self, bus: int) -> int:
        return self._index[bus]

    def line(self, line_id: int) -> Line:
        for line in self.lines:
            if line.id == line_id:
                return line
        raise KeyError(line_id)

    def without_lines(self, line_ids) -> "GridTopology":
        """Copy of the topology with ``line_ids`` removed (connectivity not enforced)."""
        drop = set(line_ids)
        kept = tuple(line for line in self.lines if line.id not in drop)
        return _unchecked_replace(self, lines=kept)

    def is_connected(self) -> bool:
        return _connected(self.buses, self.lines)

    def validate(self):
        if len(set(self.buses)) != len(self.buses):
            raise CaseError("duplicate bus ids")
        if self.slack_bus not in self._index:
            raise CaseError(f"slack bus {self.slack_bus} is not a listed bus")
        seen = set()
        for line in self.lines:
            if line.id in seen:
                raise CaseError(f"duplicate line id {line.id}")
            seen.add(line.id)
            for b in (line.from_bus, line.to_bus):
                if b not in self._index:
                    raise CaseError(f"line {line.id} references unknown bus {b}")
            if not line.reactance > 0:
                raise CaseError(f"line {line.id}: reactance must be > 0")
            if not line.rating > 0:
                raise CaseError(f"line {line.id}: rating must be > 0")
        if len(set(self.candidate_lines)) != len(self.candidate_lines):
            raise CaseError("duplicate candidate lines")
        for c in self.candidate_lines:
            if c not in seen:
                raise CaseError(f"candidate line {c} is not a listed line")
        if any(v < 0 for v in self.base_pd) or any(v < 0 for v in self.base_qd):
            raise CaseError("base demands must be >= 0")
        if not _connected(self.buses, self.lines):
            raise CaseError("grid graph is disconnected")


def _unchecked_replace(topo: GridTopology, **changes) -> GridTopology:
    # post-trip topologies may be disconnected; callers check connectivity themselves
    obj = object.__new__(GridTopology)
    for f in ("buses", "lines", "slack_bus", "candidate_lines", "base_pd", "base_qd", "gen_share", "name", "_index"):
        object.__setattr__(obj, f, changes.get(f, getattr(topo, f)))
    return obj


def _connected(buses, lines) -> bool:
    if not buses:
        return False
    adj = {b: [] for b in buses}
    for line in lines:
        adj[line.from_bus].append(line.to_bus)
        adj[line.to_bus].append(line.from_bus)
    seen = {buses[0]}
    stack = [buses[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(buses)


_SECTIONS = {"BUS": 4, "LINE": 5, "SLACK": 1, "CANDIDATE": 1}


def parse_case(text: str, name: str = "custom") -> GridTopology:
    buses, pd, qd, share, lines, slack, cands = [], [], [], [], [], [], []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        row = raw.split("#", 1)[0].strip()
        if not row:
            continue
        if row.upper() in _SECTIONS:
            section = row.upper()
            continue
        if section is None:
            raise CaseError(f"line {lineno}: record outside of any section")
        fields = row.split()
        if len(fields) != _SECTIONS[section]:
            raise CaseError(f"line {lineno}: {section} record needs {_SECTIONS[section]} fields, got {len(fields)}")
        try:
            if section == "BUS":
                buses.append(int(fields[0]))
                pd.append(float(fields[1]))
                qd.append(float(fields[2]))
                share.append(float(fields[3]))
            elif section == "LINE":
                lines.append(Line(int(fields[0]), int(fields[1]), int(fields[2]), float(fields[3]), float(fields[4])))
            elif section == "SLACK":
                slack.append(int(fields[0]))
            else:
                cands.append(int(fields[0]))
        except ValueError as exc:
            raise CaseError(f"line {lineno}: bad {section} field ({exc})") from None
        if section == "LINE":
            bus_set = set(buses)
            ln = lines[-1]
            for b in (ln.from_bus, ln.to_bus):
                if bus_set and b not in bus_set:
                    raise CaseError(f"line {lineno}: LINE field to/from bus {b} is not a listed bus")
            if ln.reactance <= 0:
                raise CaseError(f"line {lineno}: LINE field reactance must be > 0")
            if ln.rating <= 0:
                raise CaseError(f"line {lineno}: LINE field rating must be > 0")
    if len(slack) != 1:
        raise CaseError(f"expected exactly one SLACK record, got {len(slack)}")
    return GridTopology(
        buses=tuple(buses),
        lines=tuple(lines),
        slack_bus=slack[0],
        candidate_lines=tuple(cands),
        base_pd=tuple(pd),
        base_qd=tuple(qd),
        gen_share=tuple(share),
        name=name,
    )


def load_case(case: str | Path) -> GridTopology:
    """Load a bundled case by name (``"toy5"``, ``"ieee30"``) or a case file path."""
    key = str(case)
    if key in BUNDLED_CASES:
        text = resources.files("gridcast.grid.cases").joinpath(f"{key}.case").read_text()
        return parse_case(text, name=key)
    path = Path(case)
    if not path.is_file():
        raise CaseError(f"unknown case {key!r}: not a bundled case and no such file")
    return parse_case(path.read_text(), name=path.stem)


def susceptance_matrix(topology: GridTopology) -> np.ndarray:
    n = topology.n_buses
    B = np.zeros((n, n))
    for line in topology.lines:
        i, j = topology.bus_index(line.from_bus), topology.bus_index(line.to_bus)
        b = 1.0 / line.reactance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b
    return B


def incidence(topology: GridTopology) -> np.ndarray:
    """Line-by-bus incidence matrix scaled by 1/x, so ``flows = K @ angles``."""
    K = np.zeros((len(topology.lines), topology.n_buses))
    for r, line in enumerate(topology.lines):
        K[r, topology.bus_index(line.from_bus)] = 1.0 / line.reactance
        K[r, topology.bus_index(line.to_bus)] = -1.0 / line.reactance
    return K


__all__ = [
    "BUNDLED_CASES",
    "CaseError",
    "GridTopology",
    "Line",
    "load_case",
    "parse_case",
    "susceptance_matrix",
    "incidence",
]
