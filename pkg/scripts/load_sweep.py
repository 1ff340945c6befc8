"""Cost and iterations as the load level goes from 60% to 100% of nominal.

With ``--oracle`` each point also reports the normalized cost against the
brute-force optimum, which only works for tiny cases.
"""

import argparse
from pathlib import Path

from dplr.cli import main as cli


def run():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", default="builtin:rts24")
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--oracle", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("results") / "load.csv")
    args = ap.parse_args()
    args.out.parent.mkdir(parents=True, exist_ok=True)
    argv = ["bench", args.case, "--sweep", "load", "--lo", "0.6", "--hi", "1.0", "--points", str(args.points),
            "--workers", str(args.workers), "-o", str(args.out)]
    cli(argv + (["--oracle"] if args.oracle else []))
    print(args.out.read_text())


if __name__ == "__main__":
    run()
