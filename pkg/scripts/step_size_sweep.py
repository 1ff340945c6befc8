"""Iterations, feasibility and cost across a log-spaced grid of initial steps.

Writes one benchmark CSV per case; the optimized initial step is recorded in
the leading comment line.
"""

import argparse
from pathlib import Path

from dplr.cli import main as cli


def run():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", nargs="+", default=["builtin:rts24", "builtin:mc1"])
    ap.add_argument("--points", type=int, default=13)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for case in args.cases:
        out = args.out_dir / f"c0_{case.split(':')[-1].replace('/', '_')}.csv"
        cli(["bench", case, "--sweep", "c0", "--points", str(args.points), "--workers", str(args.workers),
             "-o", str(out)])
        print(out.read_text())


if __name__ == "__main__":
    run()
