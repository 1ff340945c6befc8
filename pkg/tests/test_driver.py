from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_unit, single_bus
from dplr.driver import (FEASIBLE, INSTANCE_INFEASIBLE, ITERATION_LIMIT, compute_cost, normalized_cost,
                         optimized_c0, solve_dplr)
from dplr.lagrangian import init_multipliers, qhat
from dplr.model import LoadProfile, Schedule, SolverConfig
from dplr.network import compute_ptdf
from dplr.oracle import OracleInfeasible, brute_force_uc, check_schedule, mc1, random_instance


def lockout_case():
    """Cheap unit still inside its minimum down time while demand exceeds the other unit."""
    big = make_unit("G1", "1", p_min=10, p_max=100, a=1, min_down=3, init_on=False, init_duration=1)
    small = make_unit("G2", "1", p_min=5, p_max=30, a=2)
    return single_bus([big, small], [60.0, 60.0])


def test_mc1_end_to_end():
    res = solve_dplr(mc1())
    assert res.status == FEASIBLE
    assert res.schedule.z.tolist() == [[1, 1], [1, 1]]
    np.testing.assert_allclose(res.schedule.p, [[30, 30], [10, 10]], atol=1e-9)
    assert res.cost.total_cost == pytest.approx(100.0)
    assert len(res.violation_history) == res.iterations
    assert res.final_violation <= SolverConfig().epsilon


def test_zero_load_is_immediately_feasible():
    inst = replace(mc1(), loads=[LoadProfile("2", (0.0, 0.0))])
    res = solve_dplr(inst)
    assert res.status == FEASIBLE and res.iterations == 1
    assert not res.schedule.z.any() and res.cost.total_cost == 0.0


def test_short_capacity_is_instance_infeasible():
    inst = replace(mc1(), loads=[LoadProfile("2", (40.0, 500.0))])
    res = solve_dplr(inst)
    assert res.status == INSTANCE_INFEASIBLE and res.schedule is None


def test_cross_period_infeasibility_hits_iteration_limit():
    cfg = SolverConfig(max_iterations=6)
    res = solve_dplr(lockout_case(), cfg)
    assert res.status == ITERATION_LIMIT
    assert res.iterations == 6 == len(res.violation_history)
    assert min(res.violation_history) > cfg.epsilon
    assert all(a > b for a, b in zip(res.step_history, res.step_history[1:]))
    assert res.step_history[0] == pytest.approx(res.c0_used)


def test_invalid_instance_rejected():
    bad = single_bus([make_unit(p_min=60, p_max=50)], [10.0])
    with pytest.raises(ValueError):
        solve_dplr(bad)


def test_c0_override_used():
    res = solve_dplr(lockout_case(), SolverConfig(max_iterations=3), c0_override=0.25)
    assert res.c0_used == 0.25 and res.step_history == [0.25, 0.125]


def test_optimized_c0_matches_driver():
    inst = lockout_case()
    assert optimized_c0(inst) == solve_dplr(inst, SolverConfig(max_iterations=5)).c0_used
    assert optimized_c0(mc1()) == solve_dplr(mc1()).c0_used


def test_cost_report():
    units = mc1().units
    off = Schedule(np.zeros((2, 2), dtype=int), np.zeros((2, 2)))
    assert compute_cost(off, units).total_cost == 0.0
    u = make_unit(startup=100)
    rep = compute_cost(Schedule(np.array([[0, 1, 1]]), np.array([[0.0, 10.0, 10.0]])), [u])
    assert rep.startup_cost == 100.0 and rep.fuel_cost == 20.0 and rep.total_cost == 120.0
    assert normalized_cost(100.0, 100.0) == 1.0
    assert normalized_cost(105.0, 100.0) == pytest.approx(1.05)
    with pytest.raises(ValueError):
        normalized_cost(1.0, 0.0)


def test_reference_cost_reported():
    res = solve_dplr(mc1(), reference_cost=80.0)
    assert res.cost.normalized_cost == pytest.approx(1.25)


def test_reproducible():
    inst = random_instance(np.random.default_rng(11))
    a, b = solve_dplr(inst), solve_dplr(inst)
    assert a.status == b.status and a.iterations == b.iterations
    assert a.violation_history == b.violation_history and a.c0_used == b.c0_used
    if a.schedule is not None:
        assert np.array_equal(a.schedule.z, b.schedule.z) and np.array_equal(a.schedule.p, b.schedule.p)


def test_backends_agree_on_mc1():
    a, b = solve_dplr(mc1()), solve_dplr(mc1(), backend="highs")
    assert a.status == b.status == FEASIBLE
    assert a.cost.total_cost == pytest.approx(b.cost.total_cost)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_feasible_exit_and_weak_duality(seed):
    inst = random_instance(np.random.default_rng(seed))
    res = solve_dplr(inst)
    if res.status == FEASIBLE:
        assert check_schedule(inst, res.schedule, tol=1e-6) == []
        assert res.cost.total_cost == pytest.approx(res.cost.startup_cost + res.cost.fuel_cost)
    if res.status == INSTANCE_INFEASIBLE:
        with pytest.raises(OracleInfeasible):
            brute_force_uc(inst)
        return
    try:
        best = brute_force_uc(inst).cost
    except OracleInfeasible:
        assert res.status == ITERATION_LIMIT
        return
    model = compute_ptdf(inst)
    lam, _ = init_multipliers(inst, model)
    assert qhat(inst, model, lam) <= best + 1e-6
    if res.status == FEASIBLE:
        assert best <= res.cost.total_cost + 1e-6
