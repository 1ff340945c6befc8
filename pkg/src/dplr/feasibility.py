"""Feasibility-testing LP for a fixed commitment and the subgradient it yields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lpkernel import EQ, LE, LpError, LpProblem, solve_lp
from .model import Multipliers, SolverConfig, UcInstance
from .network import NetworkModel, all_constraints, flow_bound, screen_constraints


@dataclass
class ViolationVector:
    v0_plus: np.ndarray  # (T,) shortfall of generation
    v0_minus: np.ndarray  # (T,) surplus of generation
    vl_plus: np.ndarray  # (L, T)
    vl_minus: np.ndarray  # (L, T)

    def total(self) -> float:
        return float(self.v0_plus.sum() + self.v0_minus.sum() + self.vl_plus.sum() + self.vl_minus.sum())


@dataclass
class FeasibilityResult:
    violation: ViolationVector
    dispatch: np.ndarray
    total_violation: float
    feasible: bool
    n_vars: int = 0
    n_rows: int = 0


@dataclass
class FeasibilityLp:
    """LP plus the bookkeeping needed to read slacks and dispatch back."""

    problem: LpProblem
    p_index: np.ndarray  # (N, T) variable index of each dispatch
    line_slacks: dict = field(default_factory=dict)  # (l, t, dir) -> variable index
    v0_plus: np.ndarray = None
    v0_minus: np.ndarray = None
    n_line_rows: int = 0
    n_ramp_rows: int = 0

    def slack_indices(self) -> np.ndarray:
        return np.concatenate([np.fromiter(self.line_slacks.values(), dtype=int, count=len(self.line_slacks)),
                               self.v0_plus, self.v0_minus]).astype(int)


BALANCE_TIE_WEIGHT = 1e-7


def ramp_limits(unit, z_prev: int, z_cur: int) -> tuple[float, float]:
    """Upper bounds on ``p_t - p_{t-1}`` and ``p_{t-1} - p_t``."""
    up = unit.ramp_up if z_prev else unit.startup_ramp
    down = unit.ramp_down if z_cur else unit.shutdown_ramp
    return up, down


def build_feasibility_lp(instance: UcInstance, model: NetworkModel, z_fixed, retained,
                         screen_ramps: bool = True, lazy: bool = False) -> FeasibilityLp:
    """Minimum total slack LP for commitment ``z_fixed``.

    ``retained`` is the set of ``(l, t, dir)`` line rows to include.  With
    ``screen_ramps`` ramp rows that the capacity box already implies are left
    out.  ``lazy`` marks line and ramp rows for on-demand generation.
    """
    z = np.asarray(z_fixed, dtype=int)
    N, T = instance.n_units, instance.horizon
    pmin = instance.unit_array("p_min")
    pmax = instance.unit_array("p_max")
    lo_p = z * pmin[:, None]
    hi_p = z * pmax[:, None]
    p_index = np.arange(N * T).reshape(N, T)
    retained = sorted(retained)
    n_line = len(retained)
    line_slacks = {key: N * T + k for k, key in enumerate(retained)}
    v0p = N * T + n_line + np.arange(T)
    v0m = N * T + n_line + T + np.arange(T)
    nvar = N * T + n_line + 2 * T

    c = np.zeros(nvar)
    c[N * T:] = 1.0
    # among equal-violation optima keep balance met and report the line overload
    c[v0p] = c[v0m] = 1.0 + BALANCE_TIE_WEIGHT
    lower = np.zeros(nvar)
    upper = np.full(nvar, math.inf)
    lower[: N * T] = lo_p.ravel()
    upper[: N * T] = hi_p.ravel()

    rows, senses, rhs, lazy_flags = [], [], [], []
    d = instance.load_matrix()
    base = model.gamma_load @ d if d.size else np.zeros((model.n_lines, T))
    G = model.gamma_unit
    loose = flow_bound(instance, model) if not np.isfinite(model.limits).all() else None
    for (l, t, sign), k in line_slacks.items():
        s = 1.0 if sign == "+" else -1.0
        r = np.zeros(nvar)
        r[p_index[:, t]] = s * G[l]
        r[k] = -1.0
        rows.append(r)
        senses.append(LE)
        F = model.limits[l] if math.isfinite(model.limits[l]) else loose[l, t]
        rhs.append(F + s * base[l, t])
        lazy_flags.append(lazy)
    n_line_rows = len(rows)

    demand = instance.total_demand()
    for t in range(T):
        r = np.zeros(nvar)
        r[p_index[:, t]] = 1.0
        r[v0p[t]] = 1.0
        r[v0m[t]] = -1.0
        rows.append(r)
        senses.append(EQ)
        rhs.append(float(demand[t]))
        lazy_flags.append(False)

    n_ramp = 0
    for i, u in enumerate(instance.units):
        p0 = u.init_power if u.init_on else 0.0
        for t in range(T):
            z_prev = int(u.init_on) if t == 0 else z[i, t - 1]
            up, down = ramp_limits(u, z_prev, z[i, t])
            prev_lo = p0 if t == 0 else lo_p[i, t - 1]
            prev_hi = p0 if t == 0 else hi_p[i, t - 1]
            # p_t - p_{t-1} <= up
            if math.isfinite(up) and not (screen_ramps and hi_p[i, t] - prev_lo <= up):
                r = np.zeros(nvar)
                r[p_index[i, t]] = 1.0
                b = up
                if t == 0:
                    b += p0
                else:
                    r[p_index[i, t - 1]] = -1.0
                rows.append(r)
                senses.append(LE)
                rhs.append(b)
                lazy_flags.append(lazy)
                n_ramp += 1
            # p_{t-1} - p_t <= down
            if math.isfinite(down) and not (screen_ramps and prev_hi - lo_p[i, t] <= down):
                r = np.zeros(nvar)
                r[p_index[i, t]] = -1.0
                b = down
                if t == 0:
                    b -= p0
                else:
                    r[p_index[i, t - 1]] = 1.0
                rows.append(r)
                senses.append(LE)
                rhs.append(b)
                lazy_flags.append(lazy)
                n_ramp += 1

    A = np.array(rows) if rows else np.zeros((0, nvar))
    problem = LpProblem(c, A, senses, rhs, lower, upper, np.array(lazy_flags, dtype=bool))
    return FeasibilityLp(problem, p_index, line_slacks, v0p, v0m, n_line_rows, n_ramp)


def read_violation(flp: FeasibilityLp, x: np.ndarray, n_lines: int, horizon: int) -> ViolationVector:
    vl_plus = np.zeros((n_lines, horizon))
    vl_minus = np.zeros((n_lines, horizon))
    for (l, t, sign), k in flp.line_slacks.items():
        (vl_plus if sign == "+" else vl_minus)[l, t] = max(x[k], 0.0)
    return ViolationVector(np.maximum(x[flp.v0_plus], 0.0), np.maximum(x[flp.v0_minus], 0.0), vl_plus, vl_minus)


def retained_rows(instance: UcInstance, model: NetworkModel, z_fixed, screening: bool):
    return screen_constraints(instance, model, z_fixed) if screening else all_constraints(instance, model)


def run_feasibility_test(instance: UcInstance, model: NetworkModel, z_fixed, config: SolverConfig,
                         backend: str = "simplex", lazy: bool = True) -> FeasibilityResult:
    """Solve the minimum-violation LP for ``z_fixed`` and report slacks.

    Raises
    ------
    LpError
        If the LP kernel fails or, against expectation, reports infeasibility.
    """
    retained = retained_rows(instance, model, z_fixed, config.enable_screening)
    flp = build_feasibility_lp(instance, model, z_fixed, retained, screen_ramps=config.enable_screening,
                               lazy=lazy)
    sol = solve_lp(flp.problem, config.lp_tolerance, backend=backend)
    if sol.status != "optimal":
        raise LpError(f"feasibility-testing LP returned {sol.status}")
    viol = read_violation(flp, sol.x, instance.n_lines, instance.horizon)
    dispatch = sol.x[flp.p_index]
    V = viol.total()
    return FeasibilityResult(viol, dispatch, V, V <= config.epsilon, flp.problem.n_vars, flp.problem.n_rows)


def extract_subgradient(violation: ViolationVector) -> Multipliers:
    return Multipliers(violation.v0_plus - violation.v0_minus, violation.vl_plus.copy(), violation.vl_minus.copy())


def economic_dispatch(instance: UcInstance, model: NetworkModel, z_fixed, config: SolverConfig,
                      slack_caps: ViolationVector | None = None, backend: str = "simplex"):
    """Cheapest dispatch for fixed ``z_fixed`` with slacks capped at ``slack_caps``.

    Caps default to zero, i.e. a plain security-constrained dispatch.  Returns
    the dispatch matrix, or ``None`` when the capped LP is infeasible.
    """
    retained = retained_rows(instance, model, z_fixed, config.enable_screening)
    flp = build_feasibility_lp(instance, model, z_fixed, retained, screen_ramps=config.enable_screening, lazy=True)
    lp = flp.problem
    c = np.zeros(lp.n_vars)
    a = instance.unit_array("cost_a")
    c[flp.p_index] = a[:, None]
    upper = lp.upper.copy()
    for (l, t, sign), k in flp.line_slacks.items():
        src = (slack_caps.vl_plus if sign == "+" else slack_caps.vl_minus) if slack_caps else None
        upper[k] = src[l, t] if src is not None else 0.0
    upper[flp.v0_plus] = slack_caps.v0_plus if slack_caps else 0.0
    upper[flp.v0_minus] = slack_caps.v0_minus if slack_caps else 0.0
    ed = LpProblem(c, lp.A, lp.senses, lp.rhs, lp.lower, upper, lp.lazy)
    sol = solve_lp(ed, config.lp_tolerance, backend=backend)
    if sol.status != "optimal":
        return None
    return sol.x[flp.p_index]
