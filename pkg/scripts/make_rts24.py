"""Regenerate the bundled 24-bus native case from the MATPOWER tables,
the unit extras table and a daily load shape."""

import argparse
import csv
from pathlib import Path

from dplr.caseio import parse_matpower_subset, write_native_case
from dplr.model import validate_instance

DATA = Path(__file__).resolve().parents[1] / "src" / "dplr" / "data"

# hourly load as a fraction of the annual peak, winter weekday
DAILY_SHAPE = [0.67, 0.63, 0.60, 0.59, 0.59, 0.60, 0.74, 0.86, 0.95, 0.96, 0.96, 0.95,
               0.95, 0.95, 0.93, 0.94, 0.99, 1.00, 1.00, 0.96, 0.91, 0.83, 0.73, 0.63]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DATA / "rts24.json")
    args = ap.parse_args()
    text = (DATA / "case24_ieee_rts.m").read_text()
    with open(DATA / "rts24_units.csv", newline="") as fh:
        extras = list(csv.DictReader(fh))
    inst = parse_matpower_subset(text, extras, DAILY_SHAPE)
    problems = validate_instance(inst)
    if problems:
        raise SystemExit("\n".join(problems))
    args.out.write_text(write_native_case(inst))
    cap = sum(u.p_max for u in inst.units)
    print(f"wrote {args.out}: {inst.n_units} units, {inst.n_lines} lines, "
          f"peak {inst.total_demand().max():.0f} MW of {cap:.0f} MW capacity")


if __name__ == "__main__":
    main()
