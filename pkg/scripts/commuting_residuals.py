"""Worst commuting-diagram residuals, local and on the two-triangle square."""

import argparse

import numpy as np

from psfeec.dofs import commute_residuals
from psfeec.globalspace import global_project
from psfeec.mesh import powell_sabin_refine, reference_split, unit_square_mesh


def worst(rows):
    return max(max(r["rot_residual"], r["div_residual"]) for r in rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ref = reference_split()
    sq = powell_sabin_refine(unit_square_mesh(1))
    print("which  r  local      global")
    for which in ("thm1", "thm2"):
        for r in (2, 3, 4):
            loc = commute_residuals(ref, which, r, args.trials, np.random.default_rng(args.seed))
            glo = commute_residuals(None, which, r, args.trials, np.random.default_rng(args.seed),
                                    project=lambda c, d, f: global_project(sq, c, d, f))
            print(f"{which}  {r}  {worst(loc):.2e}  {worst(glo):.2e}")


if __name__ == "__main__":
    main()
