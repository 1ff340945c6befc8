"""Analytical trial commitment from multipliers and the per-period dual start.

Sign convention: the relaxed Lagrangian is

    cost - lambda0_t (sum p - sum d) + lambda+ (flow - F) + lambda- (-flow - F)

so ``lambda0`` reads as a nonnegative energy price and each unit sees the
price signal ``beta = -lambda0 + sum_l (lambda+ - lambda-) gamma_unit``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lpkernel import LE, EQ, LpProblem, solve_lp
from .model import GeneratingUnit, Multipliers, UcInstance, startup_cost
from .network import NetworkModel


class InstanceInfeasible(ValueError):
    def __init__(self, period: int, message: str = ""):
        self.period = period
        super().__init__(message or f"period {period}: no dispatch satisfies balance and line limits")


@dataclass(frozen=True)
class BetaTable:
    beta: np.ndarray  # (N, T)
    beta0: np.ndarray  # (N,)


def commitment_threshold(units: Sequence[GeneratingUnit]) -> np.ndarray:
    a = np.array([u.cost_a for u in units], dtype=float)
    b = np.array([u.cost_b for u in units], dtype=float)
    pmax = np.array([u.p_max for u in units], dtype=float)
    pmin = np.array([u.p_min for u in units], dtype=float)
    return np.maximum(-a - b / pmax, -a - b / pmin)


def _finite_limits(model: NetworkModel) -> np.ndarray:
    return np.where(np.isfinite(model.limits), model.limits, 0.0)


def compute_beta(model: NetworkModel, lam: Multipliers, units: Sequence[GeneratingUnit]) -> BetaTable:
    net = lam.lambda_plus - lam.lambda_minus
    beta = -lam.lambda0[None, :] + model.gamma_unit.T @ net
    return BetaTable(beta, commitment_threshold(units))


def beta_direction(model: NetworkModel, g: Multipliers) -> np.ndarray:
    """Change of ``beta`` per unit step along multiplier direction ``g``."""
    return -g.lambda0[None, :] + model.gamma_unit.T @ (g.lambda_plus - g.lambda_minus)


def trial_uc(table: BetaTable) -> np.ndarray:
    """Commit exactly where the price signal is strictly below the threshold."""
    return (table.beta < table.beta0[:, None]).astype(int)


def trial_dispatch(table: BetaTable, z_trial, units: Sequence[GeneratingUnit]) -> np.ndarray:
    a = np.array([u.cost_a for u in units], dtype=float)[:, None]
    pmax = np.array([u.p_max for u in units], dtype=float)[:, None]
    pmin = np.array([u.p_min for u in units], dtype=float)[:, None]
    # ties at a + beta == 0 go to p_max
    p = np.where(a + table.beta <= 0, pmax, pmin)
    return np.where(np.asarray(z_trial) == 1, p, 0.0)


def unit_period_value(unit: GeneratingUnit, beta: float, z: int, p: float) -> float:
    """Objective of the single unit-period subproblem, commitment cost excluded."""
    return unit.cost_a * p + unit.cost_b * z + beta * p


def eval_qhat(instance: UcInstance, model: NetworkModel, lam: Multipliers, z_trial, p_trial,
              include_startup: bool = False) -> float:
    """Lagrangian of the doubly relaxed problem at ``(z_trial, p_trial)``.

    When the pair is the minimiser for ``lam`` this is the dual function value.
    ``include_startup`` adds the start-up cost of ``z_trial`` for reporting;
    the dual function itself leaves it out.
    """
    z = np.asarray(z_trial, dtype=float)
    p = np.asarray(p_trial, dtype=float)
    a = instance.unit_array("cost_a")[:, None]
    b = instance.unit_array("cost_b")[:, None]
    table = compute_beta(model, lam, instance.units)
    value = float(np.sum(a * p + b * z + table.beta * p))
    d = instance.load_matrix()
    base = model.gamma_load @ d if d.size else np.zeros((model.n_lines, instance.horizon))
    F = _finite_limits(model)[:, None]
    value += float(lam.lambda0 @ instance.total_demand())
    value -= float(np.sum(lam.lambda_plus * (base + F)))
    value += float(np.sum(lam.lambda_minus * (base - F)))
    if include_startup:
        value += startup_cost(np.asarray(z_trial, dtype=int), instance.units)
    return value


def qhat(instance: UcInstance, model: NetworkModel, lam: Multipliers) -> float:
    """Dual function value: evaluates the Lagrangian at its analytical minimiser."""
    table = compute_beta(model, lam, instance.units)
    z = trial_uc(table)
    return eval_qhat(instance, model, lam, z, trial_dispatch(table, z, instance.units))


def convex_hull_lp(instance: UcInstance, model: NetworkModel, t: int, screening: bool = True):
    """Period-``t`` LP with commitment relaxed to [0, 1].

    Variables are ``[p_1..p_N, z_1..z_N]``.  Returns the problem together with
    the row index of the balance row and a list of ``(row, line, sign)`` for
    the line rows that were kept.
    """
    N = instance.n_units
    pmin = instance.unit_array("p_min")
    pmax = instance.unit_array("p_max")
    c = np.concatenate([instance.unit_array("cost_a"), instance.unit_array("cost_b")])
    rows, senses, rhs = [], [], []
    rows.append(np.concatenate([np.ones(N), np.zeros(N)]))
    senses.append(EQ)
    rhs.append(float(instance.total_demand()[t]))
    d = instance.load_matrix()
    base = model.gamma_load @ d[:, t] if d.size else np.zeros(model.n_lines)
    line_rows = []
    G = model.gamma_unit
    for l, F in enumerate(model.limits):
        if not math.isfinite(F):
            continue
        for sign in (1.0, -1.0):
            if screening:
                worst = np.maximum(sign * G[l] * pmax, 0.0).sum() - sign * base[l]
                if worst <= F:
                    continue
            line_rows.append((len(rows), l, sign))
            rows.append(np.concatenate([sign * G[l], np.zeros(N)]))
            senses.append(LE)
            rhs.append(F + sign * base[l])
    for i in range(N):
        r = np.zeros(2 * N)
        r[i], r[N + i] = 1.0, -pmax[i]
        rows.append(r)
        senses.append(LE)
        rhs.append(0.0)
        r = np.zeros(2 * N)
        r[i], r[N + i] = -1.0, pmin[i]
        rows.append(r)
        senses.append(LE)
        rhs.append(0.0)
    lower = np.zeros(2 * N)
    upper = np.concatenate([pmax, np.ones(N)])
    A = np.array(rows) if rows else np.zeros((0, 2 * N))
    return LpProblem(c, A, senses, rhs, lower, upper), 0, line_rows


def init_multipliers(instance: UcInstance, model: NetworkModel, tolerance: float = 1e-8,
                     screening: bool = True, backend: str = "simplex") -> tuple[Multipliers, np.ndarray]:
    """Dual-optimal multipliers from T independent convex-hull LPs.

    Returns the multipliers and the vector of per-period LP optima.

    Raises
    ------
    InstanceInfeasible
        If some period admits no dispatch meeting balance and line limits.
    """
    T, L = instance.horizon, instance.n_lines
    lam = Multipliers.zeros(L, T)
    optima = np.zeros(T)
    for t in range(T):
        lp, bal, line_rows = convex_hull_lp(instance, model, t, screening)
        sol = solve_lp(lp, tolerance, backend=backend)
        if sol.status != "optimal":
            raise InstanceInfeasible(t + 1)
        optima[t] = sol.objective_value
        lam.lambda0[t] = sol.row_duals[bal]
        for row, l, sign in line_rows:
            price = max(-sol.row_duals[row], 0.0)
            if sign > 0:
                lam.lambda_plus[l, t] = price
            else:
                lam.lambda_minus[l, t] = price
    return lam, optima
