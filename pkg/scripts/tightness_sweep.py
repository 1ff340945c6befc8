"""Sweep minimum up/down, line-limit and ramp scaling factors on one case."""

import argparse
from pathlib import Path

from dplr.cli import main as cli

RANGES = {"s_M": (0.5, 2.0), "s_F": (0.6, 1.4), "s_R": (0.4, 1.6)}


def run():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", default="builtin:rts24")
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, (lo, hi) in RANGES.items():
        out = args.out_dir / f"{name}.csv"
        cli(["bench", args.case, "--sweep", name, "--lo", str(lo), "--hi", str(hi), "--points",
             str(args.points), "--workers", str(args.workers), "-o", str(out)])
        print(out.read_text())


if __name__ == "__main__":
    run()
