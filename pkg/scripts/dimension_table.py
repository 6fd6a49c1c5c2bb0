"""Local dimension table on the reference split, computed vs closed form."""

import argparse
import csv
import sys

from psfeec.mesh import reference_split
from psfeec.spaces import dimension_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r-max", type=int, default=6)
    args = ap.parse_args()
    rows = dimension_table(reference_split(), args.r_max)
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    bad = [r for r in rows if r["formula"] is not None and not r["match"]]
    print(f"# {len(rows)} rows, {len(bad)} mismatches", file=sys.stderr)
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
