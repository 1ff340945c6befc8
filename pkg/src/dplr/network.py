"""DC network model: PTDF construction, flow evaluation and row screening."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lpkernel import solve_linear_system
from .model import UcInstance


@dataclass(frozen=True)
class NetworkModel:
    """Shift factors of unit and load injections on every line.

    ``ptdf`` is the bus-level matrix (lines x buses) with a zero slack column;
    ``gamma_unit`` and ``gamma_load`` are its columns picked by the bus of
    each unit and of each distinct load bus.
    """

    ptdf: np.ndarray
    gamma_unit: np.ndarray
    gamma_load: np.ndarray
    limits: np.ndarray
    slack_bus: str
    buses: tuple[str, ...]

    @property
    def n_lines(self) -> int:
        return self.ptdf.shape[0]


def _incidence(buses, lines) -> tuple[np.ndarray, np.ndarray]:
    idx = {b: k for k, b in enumerate(buses)}
    C = np.zeros((len(lines), len(buses)))
    for l, ln in enumerate(lines):
        C[l, idx[ln.from_bus]] = 1.0
        C[l, idx[ln.to_bus]] = -1.0
    susceptance = np.array([1.0 / ln.reactance for ln in lines])
    return C, susceptance


def bus_ptdf(buses, lines, slack_bus) -> np.ndarray:
    """PTDF matrix ``H`` (L x B) from the reduced susceptance matrix."""
    buses = list(buses)
    C, bl = _incidence(buses, lines)
    L, B = C.shape
    s = buses.index(slack_bus)
    keep = [k for k in range(B) if k != s]
    Cr = C[:, keep]
    Br = Cr.T @ (bl[:, None] * Cr)
    H = np.zeros((L, B))
    if keep and L:
        # Br is symmetric, so H_r^T = Br^{-1} Cr^T diag(b)
        H[:, keep] = solve_linear_system(Br, Cr.T * bl[None, :]).T
    return H


def compute_ptdf(instance: UcInstance) -> NetworkModel:
    buses = list(instance.buses)
    H = bus_ptdf(buses, instance.lines, instance.slack_bus)
    idx = {b: k for k, b in enumerate(buses)}
    gu = H[:, [idx[u.bus] for u in instance.units]] if instance.units else np.zeros((len(instance.lines), 0))
    load_buses = instance.load_buses()
    gd = H[:, [idx[b] for b in load_buses]] if load_buses else np.zeros((len(instance.lines), 0))
    limits = np.array([ln.limit for ln in instance.lines], dtype=float)
    return NetworkModel(H, gu, gd, limits, instance.slack_bus, tuple(buses))


def line_flows(model: NetworkModel, p_t, d_t) -> np.ndarray:
    """Flows of one period: ``gamma_unit @ p_t - gamma_load @ d_t``."""
    p_t = np.asarray(p_t, dtype=float)
    d_t = np.asarray(d_t, dtype=float)
    if p_t.shape != (model.gamma_unit.shape[1],) or d_t.shape != (model.gamma_load.shape[1],):
        raise ValueError("dimension mismatch between injections and network model")
    return model.gamma_unit @ p_t - model.gamma_load @ d_t


def dc_flows_direct(buses, lines, slack_bus, injection) -> np.ndarray:
    """Line flows from bus angles of the DC model.

    Independent of the PTDF path: assembles the nodal susceptance matrix,
    fixes the slack angle at zero and solves for the rest directly.
    """
    buses = list(buses)
    idx = {b: k for k, b in enumerate(buses)}
    B = len(buses)
    Y = np.zeros((B, B))
    for ln in lines:
        i, j = idx[ln.from_bus], idx[ln.to_bus]
        y = 1.0 / ln.reactance
        Y[i, i] += y
        Y[j, j] += y
        Y[i, j] -= y
        Y[j, i] -= y
    s = idx[slack_bus]
    keep = [k for k in range(B) if k != s]
    theta = np.zeros(B)
    injection = np.asarray(injection, dtype=float)
    if keep:
        theta[keep] = np.linalg.solve(Y[np.ix_(keep, keep)], injection[keep])
    return np.array([(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.reactance for ln in lines])


def screen_constraints(instance: UcInstance, model: NetworkModel, z_fixed) -> set[tuple[int, int, str]]:
    """Line-period-direction triples that may bind for commitment ``z_fixed``.

    A direction is dropped when even the worst dispatch inside the capacity
    box ``[z p_min, z p_max]`` keeps the flow within the limit.  Indices are
    zero-based; direction is ``"+"`` or ``"-"``.
    """
    z = np.asarray(z_fixed, dtype=float)
    lo = z * instance.unit_array("p_min")[:, None]
    hi = z * instance.unit_array("p_max")[:, None]
    d = instance.load_matrix()
    G = model.gamma_unit
    base = model.gamma_load @ d  # (L, T)
    # per (l, t): largest and smallest achievable unit contribution
    a = G[:, :, None] * lo[None, :, :]
    b = G[:, :, None] * hi[None, :, :]
    up = np.maximum(a, b).sum(axis=1) - base
    down = np.maximum(-a, -b).sum(axis=1) + base
    retained = set()
    for l, F in enumerate(model.limits):
        if not math.isfinite(F):
            continue
        for t in range(instance.horizon):
            if up[l, t] > F:
                retained.add((l, t, "+"))
            if down[l, t] > F:
                retained.add((l, t, "-"))
    return retained


def all_constraints(instance: UcInstance, model: NetworkModel) -> set[tuple[int, int, str]]:
    """Every line row, unlimited lines included, used when screening is disabled."""
    return {(l, t, s) for l in range(model.n_lines) for t in range(instance.horizon) for s in "+-"}


def flow_bound(instance: UcInstance, model: NetworkModel) -> np.ndarray:
    """Per (line, period) bound on |flow| over every dispatch in ``[0, p_max]``.

    Stands in for an unlimited line's limit so its rows stay finite and
    never bind.
    """
    d = instance.load_matrix()
    base = model.gamma_load @ d if d.size else np.zeros((model.n_lines, instance.horizon))
    reach = np.abs(model.gamma_unit) @ instance.unit_array("p_max")
    return reach[:, None] + np.abs(base) + 1.0
