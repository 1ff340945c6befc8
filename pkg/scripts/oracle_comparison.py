"""Solve random tiny instances and compare against the brute-force optimum.

Prints the normalized-cost distribution and, for every run that stops at the
iteration limit, which initial steps on a log grid would have succeeded.
"""

import argparse
import statistics

import numpy as np

from dplr.driver import FEASIBLE, solve_dplr
from dplr.model import SolverConfig
from dplr.oracle import OracleInfeasible, brute_force_uc, random_instance

GRID = np.geomspace(1e-4, 1.0, 9)


def run():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--seed", type=int, default=6000)
    ap.add_argument("--max-lines", type=int, default=2)
    args = ap.parse_args()
    cfg = SolverConfig(max_iterations=20)
    ratios, failed = [], []
    seed = args.seed
    while len(ratios) + len(failed) < args.instances:
        inst = random_instance(np.random.default_rng(seed))
        seed += 1
        if inst.n_lines > args.max_lines:
            continue
        try:
            best = brute_force_uc(inst).cost
        except OracleInfeasible:
            continue
        res = solve_dplr(inst, cfg)
        if res.status != FEASIBLE:
            rescue = [f"{c:.3g}" for c in GRID if solve_dplr(inst, cfg, c0_override=float(c)).status == FEASIBLE]
            failed.append(seed - 1)
            print(f"seed {seed - 1}: {res.status}, c0*={res.c0_used:.4g}, final V={res.final_violation:.4g}, "
                  f"feasible with c0 in {rescue or 'none of the grid'}")
            continue
        ratios.append(res.cost.total_cost / best if best > 0 else 1.0)
    print(f"solved {len(ratios)}/{len(ratios) + len(failed)}; N_c median {statistics.median(ratios):.4f}, "
          f"max {max(ratios):.4f}, below 1: {sum(r < 1 - 1e-9 for r in ratios)}")


if __name__ == "__main__":
    run()
