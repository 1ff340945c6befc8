"""Outer loop: trial commitment, repair, feasibility test, multiplier update."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .feasibility import economic_dispatch, extract_subgradient, run_feasibility_test
from .lagrangian import (InstanceInfeasible, compute_beta, init_multipliers, trial_uc)
from .model import GeneratingUnit, Schedule, SolverConfig, UcInstance, startup_cost, validate_instance
from .network import compute_ptdf
from .nstd import adjust_schedule, build_nstd
from .stepsize import StepSchedule, initial_step, update_multipliers

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
ITERATION_LIMIT = "iteration_limit"
INSTANCE_INFEASIBLE = "instance_infeasible"


@dataclass
class CostReport:
    total_cost: float
    startup_cost: float
    fuel_cost: float
    normalized_cost: float | None = None


@dataclass
class SolveResult:
    status: str
    schedule: Schedule | None
    cost: CostReport | None
    iterations: int
    violation_history: list[float] = field(default_factory=list)
    c0_used: float | None = None
    timings: dict[str, float] = field(default_factory=dict)
    step_history: list[float] = field(default_factory=list)
    last_schedule: Schedule | None = None

    @property
    def final_violation(self) -> float:
        return self.violation_history[-1] if self.violation_history else float("nan")


def compute_cost(schedule: Schedule, units: Sequence[GeneratingUnit]) -> CostReport:
    a = np.array([u.cost_a for u in units], dtype=float)[:, None]
    b = np.array([u.cost_b for u in units], dtype=float)[:, None]
    fuel = float(np.sum(a * schedule.p + b * schedule.z)) if len(units) else 0.0
    start = startup_cost(schedule.z, units) if len(units) else 0.0
    return CostReport(fuel + start, start, fuel)


def normalized_cost(dplr_cost: float, reference_cost: float) -> float:
    if not reference_cost > 0:
        raise ValueError("reference cost must be positive")
    return dplr_cost / reference_cost


class _Clock:
    def __init__(self):
        self.ms: dict[str, float] = {}

    def add(self, stage, start):
        self.ms[stage] = self.ms.get(stage, 0.0) + (time.perf_counter() - start) * 1e3


def _clip_dispatch(z, p, units):
    pmin = np.array([u.p_min for u in units])[:, None]
    pmax = np.array([u.p_max for u in units])[:, None]
    return np.where(z == 1, np.clip(p, pmin, pmax), 0.0)


def solve_dplr(instance: UcInstance, config: SolverConfig = SolverConfig(), c0_override: float | None = None,
               backend: str = "simplex", reference_cost: float | None = None) -> SolveResult:
    """Run the trial/repair/test/update loop until the repaired commitment
    is feasible or ``config.max_iterations`` tests have been made."""
    problems = validate_instance(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    clock = _Clock()
    t0 = time.perf_counter()
    model = compute_ptdf(instance)
    graphs = [build_nstd(u, instance.horizon) for u in instance.units]
    clock.add("setup", t0)

    t0 = time.perf_counter()
    try:
        lam, _ = init_multipliers(instance, model, config.lp_tolerance, config.enable_screening, backend)
    except InstanceInfeasible as exc:
        log.info("instance infeasible: %s", exc)
        return SolveResult(INSTANCE_INFEASIBLE, None, None, 0, timings=clock.ms)
    clock.add("init", t0)

    history: list[float] = []
    steps: list[float] = []
    schedule_obj: StepSchedule | None = None
    c0_used = None
    last = None
    for k in range(config.max_iterations):
        t0 = time.perf_counter()
        table = compute_beta(model, lam, instance.units)
        z_trial = trial_uc(table)
        clock.add("trial", t0)

        t0 = time.perf_counter()
        z_new, _, _ = adjust_schedule(instance, z_trial, graphs)
        clock.add("adjust", t0)

        t0 = time.perf_counter()
        res = run_feasibility_test(instance, model, z_new, config, backend=backend)
        clock.add("feasibility", t0)
        history.append(res.total_violation)
        last = Schedule(z_new, _clip_dispatch(z_new, res.dispatch, instance.units))
        log.debug("iteration %d: V=%.6g", k, res.total_violation)

        if res.feasible:
            t0 = time.perf_counter()
            p = economic_dispatch(instance, model, z_new, config, slack_caps=res.violation, backend=backend)
            clock.add("dispatch", t0)
            if p is None:
                p = res.dispatch
            schedule = Schedule(z_new, _clip_dispatch(z_new, p, instance.units))
            cost = compute_cost(schedule, instance.units)
            if reference_cost is not None:
                cost.normalized_cost = normalized_cost(cost.total_cost, reference_cost)
            return SolveResult(FEASIBLE, schedule, cost, k + 1, history, c0_used, clock.ms, steps, schedule)

        if k + 1 == config.max_iterations:
            break
        t0 = time.perf_counter()
        g = extract_subgradient(res.violation)
        if schedule_obj is None:
            c0_used = c0_override if c0_override is not None else initial_step(lam, g, table, model, config)
            schedule_obj = StepSchedule(c0_used)
        c_k = schedule_obj.step(k + 1)
        steps.append(c_k)
        lam = update_multipliers(lam, g, c_k)
        clock.add("update", t0)

    cost = compute_cost(last, instance.units) if last is not None else None
    return SolveResult(ITERATION_LIMIT, None, cost, len(history), history, c0_used, clock.ms, steps, last)


def optimized_c0(instance: UcInstance, config: SolverConfig = SolverConfig(), backend: str = "simplex"):
    """The initial step the driver would pick, or ``None`` when the first
    repaired commitment is already feasible."""
    res = solve_dplr(instance, replace(config, max_iterations=2), backend=backend)
    return res.c0_used
