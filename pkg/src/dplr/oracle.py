"""Exact ground truth for tiny instances.

Nothing here reuses the solver's code paths: feasible strings come from a
per-period recursion, dispatch LPs are written in bus-angle form and handed
to HiGHS, and schedule checking recomputes every constraint from scratch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import GeneratingUnit, LoadProfile, Schedule, TransmissionLine, UcInstance
from .network import dc_flows_direct

MAX_STRING_HORIZON = 16


class SearchSpaceTooLarge(ValueError):
    def __init__(self, count: int, limit: int):
        self.count = count
        super().__init__(f"{count} commitment combinations exceed the limit of {limit}")


class OracleInfeasible(ValueError):
    pass


def enumerate_feasible_strings(unit: GeneratingUnit, horizon: int) -> list[tuple[int, ...]]:
    """All commitment strings obeying minimum up/down times, sorted."""
    if horizon > MAX_STRING_HORIZON:
        raise ValueError(f"horizon {horizon} too large for enumeration (max {MAX_STRING_HORIZON})")
    need = {1: unit.min_up, 0: unit.min_down}
    out: list[tuple[int, ...]] = []

    def grow(prefix, status, held):
        if len(prefix) == horizon:
            out.append(tuple(prefix))
            return
        grow(prefix + [status], status, held + 1)
        if held >= need[status]:
            grow(prefix + [1 - status], 1 - status, 1)

    grow([], int(unit.init_on), unit.init_duration)
    return sorted(out)


def _ramp_bounds(u: GeneratingUnit, z_prev: int, z_cur: int):
    return (u.ramp_up if z_prev else u.startup_ramp, u.ramp_down if z_cur else u.shutdown_ramp)


def _angle_dispatch_lp(instance: UcInstance, z: np.ndarray):
    """Cheapest dispatch for fixed ``z`` in bus-angle form, or ``None``."""
    N, T = instance.n_units, instance.horizon
    buses = list(instance.buses)
    B = len(buses)
    bidx = {b: k for k, b in enumerate(buses)}
    slack = bidx[instance.slack_bus]
    nv = N * T + B * T
    P = lambda i, t: i * T + t  # noqa: E731
    TH = lambda b, t: N * T + b * T + t  # noqa: E731
    c = np.zeros(nv)
    for i, u in enumerate(instance.units):
        for t in range(T):
            c[P(i, t)] = u.cost_a
    bounds = []
    for i, u in enumerate(instance.units):
        for t in range(T):
            bounds.append((z[i, t] * u.p_min, z[i, t] * u.p_max))
    for b in range(B):
        for t in range(T):
            bounds.append((0.0, 0.0) if b == slack else (None, None))

    demand = np.zeros((B, T))
    for load in instance.loads:
        demand[bidx[load.bus]] += np.asarray(load.demand, dtype=float)

    A_eq, b_eq = [], []
    for b in range(B):
        for t in range(T):
            row = np.zeros(nv)
            for i, u in enumerate(instance.units):
                if bidx[u.bus] == b:
                    row[P(i, t)] += 1.0
            for ln in instance.lines:
                f, g = bidx[ln.from_bus], bidx[ln.to_bus]
                y = 1.0 / ln.reactance
                if f == b:
                    row[TH(f, t)] -= y
                    row[TH(g, t)] += y
                if g == b:
                    row[TH(g, t)] -= y
                    row[TH(f, t)] += y
            A_eq.append(row)
            b_eq.append(demand[b, t])

    A_ub, b_ub = [], []
    for ln in instance.lines:
        if not math.isfinite(ln.limit):
            continue
        f, g = bidx[ln.from_bus], bidx[ln.to_bus]
        y = 1.0 / ln.reactance
        for t in range(T):
            for s in (1.0, -1.0):
                row = np.zeros(nv)
                row[TH(f, t)] = s * y
                row[TH(g, t)] = -s * y
                A_ub.append(row)
                b_ub.append(ln.limit)
    for i, u in enumerate(instance.units):
        p0 = u.init_power if u.init_on else 0.0
        for t in range(T):
            zp = int(u.init_on) if t == 0 else int(z[i, t - 1])
            up, down = _ramp_bounds(u, zp, int(z[i, t]))
            if math.isfinite(up):
                row = np.zeros(nv)
                row[P(i, t)] = 1.0
                if t:
                    row[P(i, t - 1)] = -1.0
                A_ub.append(row)
                b_ub.append(up + (p0 if t == 0 else 0.0))
            if math.isfinite(down):
                row = np.zeros(nv)
                row[P(i, t)] = -1.0
                if t:
                    row[P(i, t - 1)] = 1.0
                A_ub.append(row)
                b_ub.append(down - (p0 if t == 0 else 0.0))
    res = linprog(c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(A_eq), b_eq=b_eq, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9})
    if res.status != 0:
        return None
    p = res.x[: N * T].reshape(N, T)
    return float(res.fun), p


def _lower_bound(instance: UcInstance, z: np.ndarray, demand: np.ndarray) -> float:
    """Start-up + no-load cost + merit-order fuel ignoring network and ramps."""
    units = instance.units
    lb = 0.0
    for i, u in enumerate(units):
        prev = int(u.init_on)
        for t in range(instance.horizon):
            if z[i, t] and not prev:
                lb += u.startup_cost
            prev = z[i, t]
            lb += u.cost_b * z[i, t]
    for t in range(instance.horizon):
        on = [u for i, u in enumerate(units) if z[i, t]]
        floor = sum(u.p_min for u in on)
        cap = sum(u.p_max for u in on)
        if demand[t] < floor - 1e-9 or demand[t] > cap + 1e-9:
            return math.inf
        lb += sum(u.cost_a * u.p_min for u in on)
        rest = demand[t] - floor
        for u in sorted(on, key=lambda u: u.cost_a):
            take = min(rest, u.p_max - u.p_min)
            lb += take * u.cost_a
            rest -= take
    return lb


@dataclass
class OracleResult:
    cost: float
    schedule: Schedule
    combinations: int
    evaluated: int


def count_feasible_strings(unit: GeneratingUnit, horizon: int) -> int:
    """Number of feasible strings, by counting over (status, run length)."""
    need = {1: unit.min_up, 0: unit.min_down}
    cap = max(need.values())
    counts = {(int(unit.init_on), min(unit.init_duration, cap)): 1}
    for _ in range(horizon):
        nxt: dict = {}
        for (status, held), n in counts.items():
            key = (status, min(held + 1, cap))
            nxt[key] = nxt.get(key, 0) + n
            if held >= need[status]:
                key = (1 - status, 1)
                nxt[key] = nxt.get(key, 0) + n
        counts = nxt
    return sum(counts.values())


def combination_count(instance: UcInstance) -> int:
    return math.prod(count_feasible_strings(u, instance.horizon) for u in instance.units)


def brute_force_uc(instance: UcInstance, max_combinations: int = 10**6) -> OracleResult:
    """Exact optimum by enumerating per-unit feasible strings.

    Combinations are visited in increasing order of a valid lower bound, so
    the search stops as soon as no remaining one can beat the incumbent.

    Raises
    ------
    SearchSpaceTooLarge
        If the number of combinations exceeds ``max_combinations``.
    OracleInfeasible
        If no combination admits a dispatch.
    """
    T = instance.horizon
    count = combination_count(instance)
    if count > max_combinations or T > MAX_STRING_HORIZON:
        raise SearchSpaceTooLarge(count, max_combinations)
    strings = [enumerate_feasible_strings(u, T) for u in instance.units]
    demand = np.zeros(T)
    for load in instance.loads:
        demand += np.asarray(load.demand, dtype=float)
    scored = []
    for combo in itertools.product(*strings):
        z = np.array(combo, dtype=int).reshape(len(strings), T)
        lb = _lower_bound(instance, z, demand)
        if math.isfinite(lb):
            scored.append((lb, combo))
    scored.sort()
    best = None
    evaluated = 0
    for lb, combo in scored:
        if best is not None and lb > best[0] + 1e-9 * (1 + abs(best[0])):
            break
        z = np.array(combo, dtype=int).reshape(len(strings), T)
        out = _angle_dispatch_lp(instance, z)
        evaluated += 1
        if out is None:
            continue
        fuel_a, p = out
        total = fuel_a + _lower_bound_fixed(instance, z)
        if best is None or total < best[0] - 1e-9 * (1 + abs(total)) or (
                abs(total - best[0]) <= 1e-9 * (1 + abs(total)) and combo < best[1]):
            best = (total, combo, p)
    if best is None:
        raise OracleInfeasible("no commitment admits a feasible dispatch")
    total, combo, p = best
    z = np.array(combo, dtype=int).reshape(len(strings), T)
    p = np.where(z == 1, p, 0.0)
    return OracleResult(float(total), Schedule(z, p), count, evaluated)


def _lower_bound_fixed(instance: UcInstance, z: np.ndarray) -> float:
    """Start-up plus no-load cost of ``z``."""
    cost = 0.0
    for i, u in enumerate(instance.units):
        prev = int(u.init_on)
        for t in range(instance.horizon):
            if z[i, t] and not prev:
                cost += u.startup_cost
            prev = z[i, t]
            cost += u.cost_b * z[i, t]
    return cost


def check_schedule(instance: UcInstance, schedule: Schedule, tol: float = 1e-6) -> list[str]:
    """Evaluate balance, line, capacity, ramp and min up/down constraints
    directly on a schedule.  Returns a list of violations."""
    z, p = np.asarray(schedule.z), np.asarray(schedule.p, dtype=float)
    N, T = instance.n_units, instance.horizon
    out = []
    if z.shape != (N, T) or p.shape != (N, T):
        return [f"schedule shape {z.shape} does not match ({N}, {T})"]
    if not np.isin(z, (0, 1)).all():
        out.append("z is not binary")
    buses = list(instance.buses)
    bidx = {b: k for k, b in enumerate(buses)}
    demand = np.zeros((len(buses), T))
    for load in instance.loads:
        demand[bidx[load.bus]] += np.asarray(load.demand, dtype=float)
    for t in range(T):
        gen = p[:, t].sum()
        if abs(gen - demand[:, t].sum()) > tol:
            out.append(f"t={t + 1}: balance off by {gen - demand[:, t].sum():.3g}")
        inj = -demand[:, t].copy()
        for i, u in enumerate(instance.units):
            inj[bidx[u.bus]] += p[i, t]
        # bus angles with the slack at zero
        Y = np.zeros((len(buses), len(buses)))
        for ln in instance.lines:
            f, g = bidx[ln.from_bus], bidx[ln.to_bus]
            Y[f, f] += 1 / ln.reactance
            Y[g, g] += 1 / ln.reactance
            Y[f, g] -= 1 / ln.reactance
            Y[g, f] -= 1 / ln.reactance
        keep = [k for k in range(len(buses)) if k != bidx[instance.slack_bus]]
        theta = np.zeros(len(buses))
        if keep:
            theta[keep] = np.linalg.solve(Y[np.ix_(keep, keep)], inj[keep])
        for ln in instance.lines:
            flow = (theta[bidx[ln.from_bus]] - theta[bidx[ln.to_bus]]) / ln.reactance
            if abs(flow) > ln.limit + tol:
                out.append(f"t={t + 1}: line {ln.id} flow {flow:.6g} exceeds {ln.limit}")
    need = {1: "min_up", 0: "min_down"}
    for i, u in enumerate(instance.units):
        for t in range(T):
            lo, hi = z[i, t] * u.p_min, z[i, t] * u.p_max
            if p[i, t] < lo - tol or p[i, t] > hi + tol:
                out.append(f"unit {u.id} t={t + 1}: p={p[i, t]:.6g} outside [{lo}, {hi}]")
        prev_p = u.init_power if u.init_on else 0.0
        prev_z = int(u.init_on)
        for t in range(T):
            up, down = _ramp_bounds(u, prev_z, int(z[i, t]))
            if p[i, t] - prev_p > up + tol:
                out.append(f"unit {u.id} t={t + 1}: ramp up {p[i, t] - prev_p:.6g} > {up}")
            if prev_p - p[i, t] > down + tol:
                out.append(f"unit {u.id} t={t + 1}: ramp down {prev_p - p[i, t]:.6g} > {down}")
            prev_p, prev_z = p[i, t], int(z[i, t])
        status, held = int(u.init_on), u.init_duration
        for t in range(T):
            if z[i, t] != status:
                if held < getattr(u, need[status]):
                    out.append(f"unit {u.id} t={t + 1}: switched after {held}h, {need[status]} violated")
                status, held = int(z[i, t]), 1
            else:
                held += 1
    return out


# --- fixtures ---------------------------------------------------------------

def mc1(horizon: int = 2, demand: float = 40.0) -> UcInstance:
    """Two buses, one 30 MW line, a cheap unit behind the line and an
    expensive one at the load bus."""
    inf = math.inf

    def unit(uid, bus, a):
        return GeneratingUnit(uid, bus, 10.0, 60.0, a, 0.0, 0.0, inf, inf, inf, inf, 1, 1, False, 1, 0.0)

    return UcInstance(
        units=[unit("U1", "1", 1.0), unit("U2", "2", 2.0)],
        lines=[TransmissionLine("L1", "1", "2", 1.0, 30.0)],
        buses=["1", "2"],
        loads=[LoadProfile("2", tuple([demand] * horizon))],
        horizon=horizon,
        slack_bus="2",
    )


def random_instance(rng: np.random.Generator, n_units: int | None = None, horizon: int | None = None,
                    n_buses: int | None = None, peak_fraction: float = 0.8,
                    startup: bool = True, ramps: bool = True, line_scale: float = 1.0) -> UcInstance:
    """Small random instance with a connected network.

    Line limits are set from the flows of a merit-order dispatch so that the
    network binds sometimes but a feasible schedule usually exists.
    """
    N = n_units if n_units is not None else int(rng.integers(1, 4))
    T = horizon if horizon is not None else int(rng.integers(1, 5))
    B = n_buses if n_buses is not None else int(rng.integers(2, 4))
    buses = [str(k + 1) for k in range(B)]
    lines = []
    for k in range(1, B):
        lines.append((buses[int(rng.integers(0, k))], buses[k]))
    if B >= 3 and rng.random() < 0.5:
        lines.append((buses[0], buses[B - 1]) if (buses[0], buses[B - 1]) not in lines else (buses[1], buses[2]))
    units = []
    for i in range(N):
        pmin = float(rng.uniform(5, 20)).__round__(2)
        pmax = round(pmin + float(rng.uniform(10, 60)), 2)
        min_up = int(rng.integers(1, 4))
        min_down = int(rng.integers(1, 4))
        ramp = round(float(rng.uniform(0.3, 1.0)) * pmax, 2) if ramps and rng.random() < 0.7 else math.inf
        init_on = bool(rng.random() < 0.5)
        init_dur = int(rng.integers(1, 5))
        init_p = round(float(rng.uniform(pmin, pmax)), 2) if init_on else 0.0
        sd = max(pmin, init_p) if init_on else pmin
        units.append(GeneratingUnit(
            f"G{i + 1}", buses[int(rng.integers(0, B))], pmin, pmax,
            round(float(rng.uniform(1, 5)), 3), round(float(rng.uniform(0, 20)), 2),
            round(float(rng.uniform(0, 50)), 2) if startup else 0.0,
            ramp, ramp, max(pmin, ramp) if math.isfinite(ramp) else math.inf, sd if math.isfinite(ramp) else math.inf,
            min_up, min_down, init_on, init_dur, init_p))
    cap = sum(u.p_max for u in units)
    peak = peak_fraction * cap * float(rng.uniform(0.5, 1.0))
    shape = rng.uniform(0.6, 1.0, size=T)
    shape /= shape.max()
    n_load_buses = int(rng.integers(1, B + 1))
    load_buses = list(rng.choice(buses, size=n_load_buses, replace=False))
    split = rng.dirichlet(np.ones(n_load_buses))
    loads = [LoadProfile(str(b), tuple(float(round(peak * s * f, 3)) for f in shape))
             for b, s in zip(load_buses, split)]
    tmp = UcInstance(units, [TransmissionLine(f"L{k + 1}", f, g, round(float(rng.uniform(0.05, 0.5)), 3), math.inf)
                             for k, (f, g) in enumerate(lines)], buses, loads, T, buses[0])
    # limits: a fraction above the flows of a proportional dispatch
    flows = np.zeros(len(lines))
    bidx = {b: k for k, b in enumerate(buses)}
    dtot = tmp.total_demand()
    for t in range(T):
        share = dtot[t] / cap
        inj = np.zeros(B)
        for u in units:
            inj[bidx[u.bus]] += share * u.p_max
        for ld in loads:
            inj[bidx[ld.bus]] -= ld.demand[t]
        flows = np.maximum(flows, np.abs(dc_flows_direct(buses, tmp.lines, buses[0], inj)))
    out_lines = []
    for k, ln in enumerate(tmp.lines):
        limit = round(line_scale * max(5.0, float(flows[k]) * float(rng.uniform(0.9, 1.5))), 2)
        out_lines.append(TransmissionLine(ln.id, ln.from_bus, ln.to_bus, ln.reactance, limit))
    return UcInstance(units, out_lines, buses, loads, T, buses[0])
