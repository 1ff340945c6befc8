"""Domain types for unit commitment instances, schedules and duals."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INF = math.inf


@dataclass(frozen=True)
class GeneratingUnit:
    """A thermal unit with affine fuel cost ``cost_a * p + cost_b * z``.

    Ramp fields may be ``inf`` for unconstrained ramping.
    """

    id: str
    bus: str
    p_min: float
    p_max: float
    cost_a: float
    cost_b: float
    startup_cost: float
    ramp_up: float
    ramp_down: float
    startup_ramp: float
    shutdown_ramp: float
    min_up: int
    min_down: int
    init_on: bool
    init_duration: int
    init_power: float = 0.0


@dataclass(frozen=True)
class TransmissionLine:
    id: str
    from_bus: str
    to_bus: str
    reactance: float
    limit: float  # MW, inf means unlimited


@dataclass(frozen=True)
class LoadProfile:
    bus: str
    demand: tuple[float, ...]


@dataclass(frozen=True)
class UcInstance:
    units: tuple[GeneratingUnit, ...]
    lines: tuple[TransmissionLine, ...]
    buses: tuple[str, ...]
    loads: tuple[LoadProfile, ...]
    horizon: int
    slack_bus: str | None = None

    def __post_init__(self):
        # accept plain lists from callers
        for name in ("units", "lines", "buses", "loads"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.slack_bus is None and self.buses:
            object.__setattr__(self, "slack_bus", self.buses[0])

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    def load_buses(self) -> list[str]:
        """Distinct load buses in first-appearance order."""
        seen: list[str] = []
        for load in self.loads:
            if load.bus not in seen:
                seen.append(load.bus)
        return seen

    def load_matrix(self) -> np.ndarray:
        """Demand per distinct load bus, shape ``(M, T)``; duplicates are summed."""
        buses = self.load_buses()
        d = np.zeros((len(buses), self.horizon))
        for load in self.loads:
            d[buses.index(load.bus)] += np.asarray(load.demand, dtype=float)
        return d

    def total_demand(self) -> np.ndarray:
        return self.load_matrix().sum(axis=0) if self.loads else np.zeros(self.horizon)

    def unit_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(u, attr) for u in self.units], dtype=float)


@dataclass
class Schedule:
    """Commitment ``z`` and dispatch ``p``, both of shape ``(N, T)``."""

    z: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=int)
        self.p = np.asarray(self.p, dtype=float)
        if self.z.shape != self.p.shape:
            raise ValueError(f"z shape {self.z.shape} != p shape {self.p.shape}")

    def check(self, units: Sequence[GeneratingUnit], tol: float = 1e-9) -> list[str]:
        problems = []
        for i, unit in enumerate(units):
            for t in range(self.z.shape[1]):
                zi, pi = self.z[i, t], self.p[i, t]
                if zi == 0 and abs(pi) > tol:
                    problems.append(f"unit {unit.id} t={t + 1}: off but p={pi}")
                if zi == 1 and not (unit.p_min - tol <= pi <= unit.p_max + tol):
                    problems.append(f"unit {unit.id} t={t + 1}: p={pi} outside limits")
        return problems


@dataclass
class Multipliers:
    """Dual prices of the system-wide constraints.

    ``lambda0`` is the energy price of the balance row (sign-free, positive
    when energy is scarce); ``lambda_plus``/``lambda_minus`` price the two
    directions of each line limit and are nonnegative.
    """

    lambda0: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray

    def __post_init__(self):
        self.lambda0 = np.asarray(self.lambda0, dtype=float)
        self.lambda_plus = np.asarray(self.lambda_plus, dtype=float)
        self.lambda_minus = np.asarray(self.lambda_minus, dtype=float)
        if self.lambda_plus.shape != self.lambda_minus.shape:
            raise ValueError("line multiplier shapes differ")

    @classmethod
    def zeros(cls, n_lines: int, horizon: int) -> "Multipliers":
        return cls(np.zeros(horizon), np.zeros((n_lines, horizon)), np.zeros((n_lines, horizon)))

    def is_valid(self, tol: float = 0.0) -> bool:
        return bool((self.lambda_plus >= -tol).all() and (self.lambda_minus >= -tol).all())

    def copy(self) -> "Multipliers":
        return Multipliers(self.lambda0.copy(), self.lambda_plus.copy(), self.lambda_minus.copy())


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-4
    delta: float = 0.5
    step_bound: float = 1.0
    max_iterations: int = 20
    lp_tolerance: float = 1e-8
    enable_screening: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.step_bound > 0:
            raise ValueError("step_bound must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.lp_tolerance > 0:
            raise ValueError("lp_tolerance must be > 0")


def _unit_violations(u: GeneratingUnit, horizon: int) -> list[str]:
    out = []
    tag = f"unit {u.id}"
    if not u.p_min > 0:
        out.append(f"{tag}: p_min > 0 violated (p_min={u.p_min})")
    if not u.p_min <= u.p_max:
        out.append(f"{tag}: p_min <= p_max violated")
    if not (u.ramp_up >= 0 and u.ramp_down >= 0):
        out.append(f"{tag}: ramp_up, ramp_down >= 0 violated")
    if u.min_up < 1 or u.min_down < 1:
        out.append(f"{tag}: min_up, min_down >= 1 violated")
    if not u.startup_ramp >= u.p_min:
        out.append(f"{tag}: startup_ramp >= p_min violated")
    if not u.shutdown_ramp >= u.p_min:
        out.append(f"{tag}: shutdown_ramp >= p_min violated")
    if u.init_duration < 1:
        out.append(f"{tag}: init_duration >= 1 violated")
    if u.init_on:
        if not (u.p_min <= u.init_power <= u.p_max):
            out.append(f"{tag}: p_min <= init_power <= p_max violated")
        else:
            # earliest legal shutdown must be reachable by ramping down
            first_off = max(1, u.min_up - u.init_duration + 1)
            if first_off <= horizon:
                reach = u.init_power - (first_off - 1) * u.ramp_down
                if reach > u.shutdown_ramp:
                    out.append(f"{tag}: init_power cannot ramp down to shutdown_ramp before earliest shutdown")
    return out


def _connected(buses: Sequence[str], lines: Sequence[TransmissionLine]) -> bool:
    if not buses:
        return True
    adj: dict[str, list[str]] = {b: [] for b in buses}
    for ln in lines:
        if ln.from_bus in adj and ln.to_bus in adj:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)
    seen = {buses[0]}
    queue = deque([buses[0]])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(set(buses))


def validate_instance(instance: UcInstance) -> list[str]:
    """Return one description per broken invariant; empty means valid."""
    out: list[str] = []
    T = instance.horizon
    if T < 1:
        out.append("instance: horizon T >= 1 violated")
    buses = set(instance.buses)
    if len(buses) != len(instance.buses):
        out.append("instance: duplicate bus ids")
    if instance.slack_bus is not None and instance.slack_bus not in buses:
        out.append(f"instance: slack bus {instance.slack_bus} does not resolve")

    ids = [u.id for u in instance.units]
    for uid in sorted({x for x in ids if ids.count(x) > 1}):
        out.append(f"unit {uid}: duplicate id")
    for u in instance.units:
        if u.bus not in buses:
            out.append(f"unit {u.id}: bus {u.bus} does not resolve")
        out.extend(_unit_violations(u, T))

    line_ids = [ln.id for ln in instance.lines]
    for lid in sorted({x for x in line_ids if line_ids.count(x) > 1}):
        out.append(f"line {lid}: duplicate id")
    for ln in instance.lines:
        tag = f"line {ln.id}"
        if ln.from_bus not in buses or ln.to_bus not in buses:
            out.append(f"{tag}: endpoint bus does not resolve")
        if ln.from_bus == ln.to_bus:
            out.append(f"{tag}: from_bus != to_bus violated")
        if not ln.limit > 0:
            out.append(f"{tag}: limit > 0 violated")
        if ln.reactance == 0 or not math.isfinite(ln.reactance):
            out.append(f"{tag}: reactance != 0 violated")

    for load in instance.loads:
        if load.bus not in buses:
            out.append(f"load at {load.bus}: bus does not resolve")
        if len(load.demand) != T:
            out.append(f"load at {load.bus}: demand length {len(load.demand)} != T={T}")
        elif any(not d >= 0 for d in load.demand):
            out.append(f"load at {load.bus}: demand >= 0 violated")

    if not out and not _connected(instance.buses, instance.lines):
        out.append("instance: network is not connected")
    return out


def capacity_warnings(instance: UcInstance) -> list[str]:
    """Soft checks that do not make an instance invalid."""
    cap = sum(u.p_max for u in instance.units)
    peak = float(instance.total_demand().max()) if instance.horizon else 0.0
    if cap < peak:
        return [f"total capacity {cap} MW below peak demand {peak} MW"]
    return []


def _extended_runs(z_row: Sequence[int], init_on: bool, init_duration: int):
    """Maximal runs as (status, length, is_trailing); the first run includes
    the pre-horizon duration when it continues the initial state."""
    runs = []
    T = len(z_row)
    t = 0
    while t < T:
        s = z_row[t]
        start = t
        while t < T and z_row[t] == s:
            t += 1
        runs.append([s, t - start, t == T])
    if runs and runs[0][0] == int(init_on):
        runs[0][1] += init_duration
    elif T == 0 or z_row[0] != int(init_on):
        # the initial run ends right before t=1
        runs.insert(0, [int(init_on), init_duration, False])
    return runs


def check_min_up_down(z_row: Sequence[int], unit: GeneratingUnit, horizon: int | None = None) -> bool:
    """True iff ``z_row`` respects the unit's minimum up/down times.

    Runs cut off by the end of the horizon are exempt.
    """
    z_row = [int(v) for v in z_row]
    if horizon is not None and len(z_row) != horizon:
        raise ValueError(f"z_row has length {len(z_row)}, expected {horizon}")
    for status, length, trailing in _extended_runs(z_row, unit.init_on, unit.init_duration):
        if trailing:
            continue
        need = unit.min_up if status == 1 else unit.min_down
        if length < need:
            return False
    return True


def startup_count(z_row: Sequence[int], init_on: bool) -> int:
    prev = int(init_on)
    n = 0
    for v in z_row:
        if v and not prev:
            n += 1
        prev = int(v)
    return n


def startup_cost(z: np.ndarray, units: Sequence[GeneratingUnit]) -> float:
    """Constant cost per 0->1 transition, counting t=1 when the unit starts off."""
    z = np.asarray(z)
    return float(sum(u.startup_cost * startup_count(z[i], u.init_on) for i, u in enumerate(units)))
