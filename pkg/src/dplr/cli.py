"""Command-line front end: ``solve``, ``bench`` and ``oracle``.

Cases are native JSON files, or ``builtin:NAME`` for ``mc1``, ``rts24`` and
``random`` (the last one honours ``--seed``).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import caseio, oracle
from .driver import FEASIBLE, INSTANCE_INFEASIBLE, ITERATION_LIMIT, compute_cost, optimized_c0, solve_dplr
from .model import SolverConfig, UcInstance

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_INFEASIBLE, EXIT_BOUND = 0, 1, 2, 3, 4
STATUS_EXIT = {FEASIBLE: EXIT_OK, ITERATION_LIMIT: EXIT_LIMIT, INSTANCE_INFEASIBLE: EXIT_INFEASIBLE}
SWEEPS = ("c0", "s_d", "s_M", "s_F", "s_R", "load")

log = logging.getLogger("dplr")


def load_instance(source: str, seed: int | None = None) -> UcInstance:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name == "mc1":
            return oracle.mc1()
        if name == "random":
            return oracle.random_instance(np.random.default_rng(seed))
        return caseio.bundled_case(name)
    return caseio.load_case(source)


def _config(args) -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon, delta=args.delta, step_bound=args.step_bound,
                        max_iterations=args.max_iter, enable_screening=not args.no_screening)


def _add_solver_flags(p):
    d = SolverConfig()
    p.add_argument("case", help="native JSON case file or builtin:NAME")
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="feasibility tolerance on V")
    p.add_argument("--delta", type=float, default=d.delta, help="margin protecting commitments in the first step")
    p.add_argument("--step-bound", type=float, default=d.step_bound, help="upper bound u on c0")
    p.add_argument("--max-iter", type=int, default=d.max_iterations)
    p.add_argument("--no-screening", action="store_true", help="keep every line and ramp row")
    p.add_argument("--seed", type=int, default=None, help="seed for builtin:random")
    p.add_argument("--reference-cost", type=float, default=None, help="cost used for N_c")


def cmd_solve(args) -> int:
    inst = load_instance(args.case, args.seed)
    res = solve_dplr(inst, _config(args), c0_override=args.c0, reference_cost=args.reference_cost)
    print(f"status={res.status} iterations={res.iterations} V={res.final_violation:.6g} c0={res.c0_used}",
          file=sys.stderr)
    if res.status == FEASIBLE:
        text = caseio.write_schedule(res.schedule, res.cost, [u.id for u in inst.units],
                                     res.iterations, res.final_violation)
        if res.cost.normalized_cost is not None:
            text += f"# normalized_cost={res.cost.normalized_cost!r}\n"
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"schedule written to {args.out}", file=sys.stderr)
    return STATUS_EXIT[res.status]


def _grid(args) -> list[float]:
    if args.points < 1:
        raise ValueError("--points must be >= 1")
    if args.sweep == "c0":
        hi = args.hi if args.hi is not None else args.step_bound
        lo = args.lo if args.lo is not None else hi * 1e-6
        if not 0 < lo <= hi:
            raise ValueError("c0 grid needs 0 < lo <= hi")
        return list(np.geomspace(lo, hi, args.points)) if args.points > 1 else [hi]
    lo = args.lo if args.lo is not None else (0.6 if args.sweep == "load" else 0.5)
    hi = args.hi if args.hi is not None else (1.0 if args.sweep == "load" else 1.5)
    if not 0 < lo <= hi:
        raise ValueError("grid needs 0 < lo <= hi")
    return list(np.linspace(lo, hi, args.points)) if args.points > 1 else [lo]


def _bench_point(job):
    inst, label, sweep, value, config, reference = job
    factors = caseio.ScalingFactors()
    c0 = None
    if sweep == "c0":
        c0 = value
    elif sweep in ("s_d", "load"):
        factors = caseio.ScalingFactors(s_d=value)
    else:
        factors = replace(factors, **{sweep: value})
    scaled = caseio.apply_scaling(inst, factors)
    t0 = time.perf_counter()
    try:
        res = solve_dplr(scaled, config, c0_override=c0)
    except ValueError as exc:  # scaling can break unit invariants
        log.warning("%s=%g: %s", sweep, value, exc)
        res = None
    wall = (time.perf_counter() - t0) * 1e3
    feasible = res is not None and res.status == FEASIBLE
    cost = res.cost.total_cost if feasible else float("nan")
    ref = reference(scaled) if reference else None
    return {
        "case": label, "s_d": factors.s_d, "s_M": factors.s_M, "s_F": factors.s_F, "s_R": factors.s_R,
        "c0": res.c0_used if res is not None and res.c0_used is not None else (c0 if c0 else float("nan")),
        "iterations": res.iterations if res is not None else 0,
        "feasible": int(feasible), "cost": cost,
        "normalized_cost": cost / ref if feasible and ref else float("nan"),
        "wall_ms": round(wall, 3),
    }


class _OracleReference:
    """Picklable reference-cost callback backed by the brute-force oracle."""

    def __call__(self, inst):
        try:
            return oracle.brute_force_uc(inst).cost
        except (oracle.SearchSpaceTooLarge, oracle.OracleInfeasible):
            return None


class _FixedReference:
    def __init__(self, value):
        self.value = value

    def __call__(self, inst):
        return self.value


def cmd_bench(args) -> int:
    inst = load_instance(args.case, args.seed)
    config = _config(args)
    grid = _grid(args)
    reference = None
    if args.reference_cost is not None:
        reference = _FixedReference(args.reference_cost)
    elif args.oracle:
        reference = _OracleReference()
    c0_star = optimized_c0(inst, config) if args.sweep == "c0" else None
    jobs = [(inst, args.case, args.sweep, float(v), config, reference) for v in grid]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_bench_point, jobs))
    else:
        rows = [_bench_point(j) for j in jobs]
    text = caseio.write_benchmark(rows, c0_star)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = load_instance(args.case, args.seed)
    try:
        res = oracle.brute_force_uc(inst, args.max_combinations)
    except oracle.SearchSpaceTooLarge as exc:
        print(f"search space too large: {exc.count} combinations", file=sys.stderr)
        return EXIT_BOUND
    except oracle.OracleInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"cost={res.cost!r} combinations={res.combinations} evaluated={res.evaluated}", file=sys.stderr)
    sys.stdout.write(caseio.write_schedule(res.schedule, compute_cost(res.schedule, inst.units),
                                           [u.id for u in inst.units]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dplr", description="Unit commitment by Lagrangian pricing and DP repair.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one case and write the schedule CSV")
    _add_solver_flags(p)
    p.add_argument("--c0", type=float, default=None, help="initial step, overrides the optimized value")
    p.add_argument("-o", "--out", default="schedule.csv", help="schedule CSV path, '-' for stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="sweep one parameter and write a benchmark CSV")
    _add_solver_flags(p)
    p.add_argument("--sweep", choices=SWEEPS, required=True)
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--oracle", action="store_true", help="compute N_c against the brute-force optimum")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_bench, c0=None)

    p = sub.add_parser("oracle", help="exact optimum of a tiny case by enumeration")
    p.add_argument("case")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-combinations", type=int, default=10**6)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
