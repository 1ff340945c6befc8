"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` to see the gate summary.
"""

import itertools
import statistics
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_unit
from dplr import lpkernel
from dplr.driver import FEASIBLE, optimized_c0, solve_dplr
from dplr.feasibility import run_feasibility_test
from dplr.lagrangian import (BetaTable, InstanceInfeasible, commitment_threshold, compute_beta,
                             init_multipliers, qhat, trial_dispatch, trial_uc)
from dplr.lpkernel import LpProblem, kkt_residuals, solve_lp
from dplr.model import Multipliers, SolverConfig, TransmissionLine, check_min_up_down
from dplr.network import bus_ptdf, compute_ptdf
from dplr.nstd import adjust_schedule, build_nstd, repair_unit
from dplr.oracle import OracleInfeasible, brute_force_uc, check_schedule, mc1, random_instance
from dplr.stepsize import optimize_c0, step_upper_bounds, update_multipliers

from test_feasibility import residual_matches_slack
from test_lpkernel import random_bounded_lp, vertex_enumeration
from test_network import random_network
from test_stepsize import bisect_c0


@pytest.fixture
def gate(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def test_criterion_01_analytic_trial_solution(gate):
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    z_bad = obj_bad = 0
    for _ in range(1000):
        pmin = float(rng.uniform(0, 50))
        pmax = pmin + float(rng.uniform(0.1, 100))
        a, b = float(rng.uniform(0, 40)), float(rng.uniform(0, 500))
        u = make_unit(p_min=pmin, p_max=pmax, a=a, b=b)
        beta = float(rng.uniform(-60, 10))
        table = BetaTable(np.array([[beta]]), commitment_threshold([u]))
        z = int(trial_uc(table)[0, 0])
        p = float(trial_dispatch(table, [[z]], [u])[0, 0])
        got = z * (b + (a + beta) * p)
        options = [(0.0, 0)] + [(b + (a + beta) * q, 1) for q in (pmin, pmax)]
        best, z_best = min(options)
        obj_bad += abs(got - best) > 1e-10 * max(1.0, abs(best))
        z_bad += z != z_best and abs(best) > 1e-12  # exact ties at zero may go either way
    elapsed = time.perf_counter() - start
    gate(1, z_bad == 0 and obj_bad == 0 and elapsed < 1.0,
         f"1000 draws, z mismatches {z_bad}, objective mismatches {obj_bad}, {elapsed:.2f} s")


def _feasible_strings(mu, md, on, dur, T):
    u = make_unit(min_up=mu, min_down=md, init_on=on, init_duration=dur)
    rows = np.array(list(itertools.product((0, 1), repeat=T)), dtype=np.int8)
    ok = np.array([check_min_up_down(r, u) for r in rows])
    return u, rows[ok]


def test_criterion_02_nstd_repair_matches_exhaustive(gate):
    rng = np.random.default_rng(2002)
    start = time.perf_counter()
    configs = bad_dist = bad_rows = 0
    for T in range(1, 13):
        for mu in range(1, 6):
            for md in range(1, 6):
                for on in (False, True):
                    dur = int(rng.integers(1, 7))
                    u, feasible = _feasible_strings(mu, md, on, dur, T)
                    graph = build_nstd(u, T)
                    trials = rng.integers(0, 2, size=(500, T)).astype(np.int8)
                    dist = (trials[:, None, :] != feasible[None, :, :]).sum(axis=2).min(axis=1)
                    for row, d in zip(trials, dist):
                        new, k = repair_unit(graph, row)
                        bad_dist += k != d or int((new != row).sum()) != d
                        bad_rows += not check_min_up_down(new, u)
                    configs += 1
    elapsed = time.perf_counter() - start
    gate(2, bad_dist == 0 and bad_rows == 0 and elapsed < 30.0,
         f"{configs} configurations x 500 rows, distance mismatches {bad_dist}, "
         f"infeasible repairs {bad_rows}, {elapsed:.1f} s")


def test_criterion_03_strong_duality(gate, rts24):
    cases = [("mc1", mc1()), ("rts24", rts24)]
    seed = 0
    while len(cases) < 52:
        inst = random_instance(np.random.default_rng(3000 + seed))
        seed += 1
        try:
            init_multipliers(inst, compute_ptdf(inst))
        except InstanceInfeasible:
            continue
        cases.append((f"random{seed}", inst))
    worst = 0.0
    for _, inst in cases:
        model = compute_ptdf(inst)
        lam, optima = init_multipliers(inst, model)
        worst = max(worst, abs(qhat(inst, model, lam) - float(np.sum(optima))))
    gate(3, worst <= 1e-6, f"{len(cases)} instances, worst |q - sum of period optima| = {worst:.2e}")


def test_criterion_04_feasibility_test_correctness(gate):
    cfg = SolverConfig()
    feasible_runs = checker_fail = violated = unmatched = 0
    for seed in range(100):
        rng = np.random.default_rng(4000 + seed)
        inst = random_instance(rng, line_scale=float(rng.uniform(0.4, 1.2)))
        res = solve_dplr(inst, cfg)
        if res.status == FEASIBLE:
            feasible_runs += 1
            checker_fail += bool(check_schedule(inst, res.schedule, tol=1e-6))
        model = compute_ptdf(inst)
        for _ in range(3):
            z, _, _ = adjust_schedule(inst, rng.integers(0, 2, size=(inst.n_units, inst.horizon)))
            test = run_feasibility_test(inst, model, z, cfg)
            if test.total_violation > 0:
                violated += 1
                unmatched += not residual_matches_slack(inst, model, test)
    gate(4, checker_fail == 0 and unmatched == 0 and feasible_runs > 0 and violated > 0,
         f"{feasible_runs} feasible exits, checker failures {checker_fail}; "
         f"{violated} violated tests, slack/residual mismatches {unmatched}")


def test_criterion_05_screening_neutrality(gate):
    worst = 0.0
    smaller = total_slack_cases = 0
    for seed in range(100):
        rng = np.random.default_rng(5000 + seed)
        inst = random_instance(rng, line_scale=float(rng.uniform(0.4, 1.5)))
        # one unlimited line and one that can never bind
        lines = list(inst.lines)
        lines[0] = TransmissionLine(lines[0].id, lines[0].from_bus, lines[0].to_bus, lines[0].reactance,
                                    float("inf") if seed % 2 else 1e6)
        inst = replace(inst, lines=lines)
        model = compute_ptdf(inst)
        z = rng.integers(0, 2, size=(inst.n_units, inst.horizon))
        z, _, _ = adjust_schedule(inst, z)
        a = run_feasibility_test(inst, model, z, SolverConfig(), lazy=False)
        b = run_feasibility_test(inst, model, z, SolverConfig(enable_screening=False), lazy=False)
        worst = max(worst, abs(a.total_violation - b.total_violation))
        total_slack_cases += 1
        smaller += a.n_rows < b.n_rows
    gate(5, worst <= 1e-8 and smaller == total_slack_cases,
         f"100 instances, worst optimum gap {worst:.1e}, screened model smaller in "
         f"{smaller}/{total_slack_cases}")


def test_criterion_06_end_to_end_vs_oracle(gate):
    ratios, failures = [], []
    seed = 0
    while len(ratios) + len(failures) < 100:
        inst = random_instance(np.random.default_rng(6000 + seed))
        seed += 1
        if inst.n_lines > 2:
            continue
        try:
            best = brute_force_uc(inst)
        except OracleInfeasible:
            continue
        res = solve_dplr(inst, SolverConfig(max_iterations=20))
        if res.status != FEASIBLE or check_schedule(inst, res.schedule, tol=1e-6):
            failures.append(seed - 1)
            continue
        ratios.append(res.cost.total_cost / best.cost if best.cost > 0 else 1.0)
    below = sum(r < 1 - 1e-9 for r in ratios)
    median = statistics.median(ratios) if ratios else float("nan")
    n = len(ratios) + len(failures)
    gate(6, not failures and below == 0 and median <= 1.05,
         f"{n} oracle-feasible instances, {len(failures)} not solved within 20 iterations "
         f"(seeds {[6000 + s for s in failures]}), N_c below 1: {below}, median N_c {median:.4f}, "
         f"max N_c {max(ratios):.4f}")


def test_criterion_07_rts24_iterations(gate, rts24):
    cfg = SolverConfig()
    c0 = optimized_c0(rts24, cfg)
    start = time.perf_counter()
    res = solve_dplr(rts24, cfg)
    elapsed = time.perf_counter() - start
    ok = res.status == FEASIBLE and res.iterations <= 10 and elapsed < 5.0
    gate(7, ok, f"c0*={c0:.3g}, status {res.status} after {res.iterations} iterations, "
                f"final V {res.final_violation:.4g}, {elapsed:.2f} s")


def test_criterion_08_step_size_optimizer(gate):
    rng = np.random.default_rng(8008)
    worst = 0.0
    for _ in range(1000):
        shape = (int(rng.integers(1, 4)), int(rng.integers(1, 5)))
        gap = rng.normal(scale=3.0, size=shape)
        slope = rng.normal(scale=5.0, size=shape) * (rng.random(shape) < 0.8)
        delta = np.full(shape, rng.uniform(0.01, 1.0))
        u = float(rng.uniform(0.1, 10.0))
        closed = float(min(u, step_upper_bounds(gap, slope, delta).min()))
        worst = max(worst, abs(closed - bisect_c0(gap, slope, delta, u)))
    inst = mc1()
    model = compute_ptdf(inst)
    lam, _ = init_multipliers(inst, model)
    zero_ok = optimize_c0(lam, Multipliers.zeros(1, 2), compute_beta(model, lam, inst.units), model,
                          SolverConfig()) == SolverConfig().step_bound
    flips = 0
    for seed in range(200):
        r = np.random.default_rng(80000 + seed)
        inst = random_instance(r)
        model = compute_ptdf(inst)
        L, T = inst.n_lines, inst.horizon
        lam = Multipliers(r.normal(10, 10, T), r.random((L, T)) * 3, r.random((L, T)) * 3)
        g = Multipliers(r.normal(0, 20, T), r.random((L, T)) * 10, r.random((L, T)) * 10)
        cfg = SolverConfig(delta=float(r.uniform(0.05, 2.0)))
        table = compute_beta(model, lam, inst.units)
        c0 = optimize_c0(lam, g, table, model, cfg)
        after = compute_beta(model, update_multipliers(lam, g, c0) if c0 > 0 else lam, inst.units)
        protected = np.abs(table.beta - table.beta0[:, None]) >= cfg.delta
        flips += int((trial_uc(after)[protected] != trial_uc(table)[protected]).sum())
    gate(8, worst <= 1e-10 and zero_ok and flips == 0,
         f"1000 draws, worst |closed form - bisection| {worst:.1e}; zero direction gives u: {zero_ok}; "
         f"protected commitments flipped {flips}")


def _angle_flows(buses, lines, slack, injection):
    """DC flows by solving the reduced susceptance system for bus angles."""
    idx = {b: k for k, b in enumerate(buses)}
    B = np.zeros((len(buses), len(buses)))
    for ln in lines:
        i, j, y = idx[ln.from_bus], idx[ln.to_bus], 1.0 / ln.reactance
        B[i, i] += y
        B[j, j] += y
        B[i, j] -= y
        B[j, i] -= y
    keep = [k for k in range(len(buses)) if k != idx[slack]]
    theta = np.zeros(len(buses))
    theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], injection[keep])
    return np.array([(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.reactance for ln in lines])


def test_criterion_09_ptdf(gate):
    rng = np.random.default_rng(9009)
    worst = 0.0
    slack_zero = True
    for _ in range(100):
        buses, lines, slack = random_network(rng)
        H = bus_ptdf(buses, lines, slack)
        slack_zero &= bool(np.all(H[:, buses.index(slack)] == 0.0))
        inj = rng.normal(scale=50, size=len(buses))
        inj[buses.index(slack)] -= inj.sum()
        worst = max(worst, float(np.max(np.abs(H @ inj - _angle_flows(buses, lines, slack, inj)))))
    gate(9, worst <= 1e-8 and slack_zero,
         f"100 networks, worst flow difference {worst:.1e}, slack column zero: {slack_zero}")


def test_criterion_10_lp_kernel(gate):
    rng = np.random.default_rng(10010)
    worst_obj = worst_kkt = 0.0
    status_bad = 0
    for _ in range(500):
        c, A, senses, b, lo, hi = random_bounded_lp(rng)
        ref = vertex_enumeration(c, A, senses, b, lo, hi)
        problem = LpProblem(c, A, senses, b, lo, hi)
        sol = solve_lp(problem)
        if ref is None:
            status_bad += sol.status != "infeasible"
            continue
        if sol.status != "optimal":
            status_bad += 1
            continue
        worst_obj = max(worst_obj, abs(sol.objective_value - ref) / (1 + abs(ref)))
        worst_kkt = max(worst_kkt, max(kkt_residuals(problem, sol).values()))
    audit = lpkernel.KKT_AUDIT or []
    worst_audit = max((max(r.values()) for r in audit), default=0.0)
    gate(10, status_bad == 0 and worst_obj <= 1e-8 and worst_kkt <= 1e-8 and worst_audit <= 1e-8,
         f"500 LPs, status mismatches {status_bad}, worst objective error {worst_obj:.1e}, "
         f"worst KKT residual {max(worst_kkt, worst_audit):.1e} (every other test enforces the same bound)")


def test_criterion_11_tolerance_semantics(gate):
    checked = bad = 0
    for seed in range(60):
        inst = random_instance(np.random.default_rng(11000 + seed), line_scale=0.7)
        base = solve_dplr(inst, SolverConfig(epsilon=1e-12, max_iterations=20))
        hist = base.violation_history
        if len(hist) < 2:
            continue
        for eps in sorted(set([1e-4] + [v for v in hist if v > 0])):
            res = solve_dplr(inst, SolverConfig(epsilon=eps, max_iterations=20))
            first = next((k for k, v in enumerate(hist) if v <= eps), None)
            expected = len(hist) if first is None else first + 1
            bad += res.iterations != expected
            smaller = solve_dplr(inst, SolverConfig(epsilon=eps / 10, max_iterations=20))
            bad += smaller.iterations < res.iterations
            checked += 1
    gate(11, bad == 0 and checked > 0, f"{checked} (instance, epsilon) pairs, violations {bad}")
