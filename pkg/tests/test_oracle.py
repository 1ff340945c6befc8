import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_unit, single_bus
from dplr.model import LoadProfile, Schedule, check_min_up_down
from dplr.oracle import (MAX_STRING_HORIZON, OracleInfeasible, SearchSpaceTooLarge, _angle_dispatch_lp,
                         brute_force_uc, check_schedule, combination_count, count_feasible_strings,
                         enumerate_feasible_strings, mc1, random_instance)


def test_unconstrained_strings():
    assert len(enumerate_feasible_strings(make_unit(), 2)) == 4


def test_trailing_runs_are_exempt():
    u = make_unit(min_up=2, min_down=2, init_on=False, init_duration=2)
    got = {"".join(map(str, s)) for s in enumerate_feasible_strings(u, 3)}
    assert got == {"000", "001", "011", "111", "110"}


def test_initial_on_run():
    # on for 3 h with min_up 2, min_down 3: switching off at once is only legal as a trailing run
    u = make_unit(min_up=2, min_down=3, init_on=True, init_duration=3)
    got = {"".join(map(str, s)) for s in enumerate_feasible_strings(u, 3)}
    assert "000" in got and "001" not in got and "010" not in got
    young = make_unit(min_up=3, min_down=1, init_on=True, init_duration=1)
    assert all(s[:2] == (1, 1) for s in enumerate_feasible_strings(young, 4))


@settings(max_examples=200, deadline=None)
@given(up=st.integers(1, 5), down=st.integers(1, 5), on=st.booleans(), dur=st.integers(1, 6),
       T=st.integers(1, 9))
def test_enumeration_matches_predicate_and_count(up, down, on, dur, T):
    u = make_unit(min_up=up, min_down=down, init_on=on, init_duration=dur)
    got = enumerate_feasible_strings(u, T)
    brute = [s for s in itertools.product((0, 1), repeat=T) if check_min_up_down(np.array(s), u)]
    assert got == sorted(brute)
    assert count_feasible_strings(u, T) == len(got)


def test_enumeration_horizon_cap():
    with pytest.raises(ValueError):
        enumerate_feasible_strings(make_unit(), MAX_STRING_HORIZON + 1)


def test_mc1_optimum():
    res = brute_force_uc(mc1())
    assert res.cost == pytest.approx(100.0)
    assert res.schedule.z.tolist() == [[1, 1], [1, 1]]
    np.testing.assert_allclose(res.schedule.p, [[30, 30], [10, 10]], atol=1e-7)
    assert check_schedule(mc1(), res.schedule) == []


def test_zero_load_all_off():
    inst = replace(mc1(), loads=[LoadProfile("2", (0.0, 0.0))])
    res = brute_force_uc(inst)
    assert res.cost == 0.0 and not res.schedule.z.any()


def test_capacity_shortfall_infeasible():
    with pytest.raises(OracleInfeasible):
        brute_force_uc(single_bus([make_unit(p_max=50)], [20.0, 60.0]))


def test_search_bound():
    inst = random_instance(np.random.default_rng(0), n_units=3, horizon=4)
    with pytest.raises(SearchSpaceTooLarge) as err:
        brute_force_uc(inst, max_combinations=combination_count(inst) - 1)
    assert err.value.count == combination_count(inst)


def exhaustive(inst):
    """Evaluate every combination without pruning."""
    strings = [enumerate_feasible_strings(u, inst.horizon) for u in inst.units]
    best = None
    for combo in itertools.product(*strings):
        z = np.array(combo, dtype=int).reshape(len(strings), inst.horizon)
        out = _angle_dispatch_lp(inst, z)
        if out is None:
            continue
        cost = out[0] + sum(u.cost_b * z[i].sum() for i, u in enumerate(inst.units))
        for i, u in enumerate(inst.units):
            prev = int(u.init_on)
            for t in range(inst.horizon):
                cost += u.startup_cost * (z[i, t] and not prev)
                prev = z[i, t]
        best = cost if best is None else min(best, cost)
    return best


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_pruning_is_exact(seed):
    inst = random_instance(np.random.default_rng(seed), horizon=3)
    full = exhaustive(inst)
    if full is None:
        with pytest.raises(OracleInfeasible):
            brute_force_uc(inst)
        return
    res = brute_force_uc(inst)
    assert res.cost == pytest.approx(full, rel=1e-9, abs=1e-7)
    assert check_schedule(inst, res.schedule) == []


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_unit_reordering(seed):
    inst = random_instance(np.random.default_rng(seed))
    try:
        a = brute_force_uc(inst)
    except OracleInfeasible:
        return
    flipped = replace(inst, units=list(reversed(inst.units)))
    b = brute_force_uc(flipped)
    assert b.cost == pytest.approx(a.cost, rel=1e-9, abs=1e-7)


def test_checker_flags_each_constraint():
    inst = mc1()
    good = Schedule(np.ones((2, 2), dtype=int), np.array([[30.0, 30.0], [10.0, 10.0]]))
    assert check_schedule(inst, good) == []
    assert check_schedule(inst, Schedule(good.z, np.array([[30.0, 30.0], [9.0, 10.0]])))
    assert check_schedule(inst, Schedule(np.array([[1, 1], [0, 0]]), np.array([[40.0, 40.0], [0, 0]])))
    slow = single_bus([make_unit(p_min=0, p_max=100, ramp=10, init_on=True, init_duration=3, init_power=10)],
                      [10.0, 30.0])
    assert any("ramp" in m for m in check_schedule(slow, Schedule(np.ones((1, 2), dtype=int),
                                                                  np.array([[10.0, 30.0]]))))
    sticky = single_bus([make_unit(p_min=0, min_up=3, init_on=False, init_duration=5)], [5.0, 0.0, 0.0])
    msgs = check_schedule(sticky, Schedule(np.array([[1, 0, 0]]), np.array([[5.0, 0.0, 0.0]])))
    assert msgs
