"""DC power flow on a :class:`GridTopology`."""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .topology import GridTopology, incidence, susceptance_matrix


class DisconnectedGridError(RuntimeError):
    """The reduced susceptance matrix is singular because the grid is split."""


class DCSolver:
    """Factorizes the reduced susceptance matrix once for repeated solves.

    Injections are ordered like ``topology.buses``; the slack entry is
    overwritten with the balancing injection.
    """

    def __init__(self, topology: GridTopology):
        if not topology.is_connected():
            raise DisconnectedGridError("grid is disconnected; reduced susceptance matrix is singular")
        self.topology = topology
        self.slack = topology.bus_index(topology.slack_bus)
        self.keep = np.array([i for i in range(topology.n_buses) if i != self.slack], dtype=int)
        B = susceptance_matrix(topology)
        self._factor = linalg.cho_factor(B[np.ix_(self.keep, self.keep)]) if self.keep.size else None
        self.K = incidence(topology)

    def balance(self, injections: np.ndarray) -> np.ndarray:
        P = np.array(injections, dtype=float)
        others = np.delete(P, self.slack, axis=-1)
        P[..., self.slack] = -others.sum(axis=-1)
        return P

    def solve(self, injections: np.ndarray):
        """Return ``(balanced injections, angles, flows)``; accepts ``(N,)`` or ``(T, N)``."""
        P = self.balance(injections)
        theta = np.zeros_like(P)
        if self._factor is not None:
            rhs = P[..., self.keep]
            theta[..., self.keep] = linalg.cho_solve(self._factor, rhs.T).T
        flows = theta @ self.K.T
        return P, theta, flows


def dc_power_flow(topology: GridTopology, active_injections) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``B' theta = P`` with the slack angle pinned at zero.

    Returns bus angles (rad) and per-line flows (pu, from-bus to to-bus,
    ordered like ``topology.lines``).
    """
    _, theta, flows = DCSolver(topology).solve(active_injections)
    return theta, flows


def load_sensitivities(topology: GridTopology) -> np.ndarray:
    """Line flow per unit of demand at each bus, shape ``(lines, buses)``.

    Demand is served by ``gen_share`` dispatch with the slack taking the rest.
    """
    solver = DCSolver(topology)
    share = np.asarray(topology.gen_share, dtype=float)
    eye = np.eye(topology.n_buses)
    _, _, flows = solver.solve(share[None, :] - eye)
    return flows.T


def worst_case_flows(topology: GridTopology, low, high) -> np.ndarray:
    """Largest |flow| per line when each bus demand ranges over ``[low, high]``."""
    G = load_sensitivities(topology)
    a, b = G * np.asarray(low), G * np.asarray(high)
    return np.maximum(np.maximum(a, b).sum(axis=1), -np.minimum(a, b).sum(axis=1))
