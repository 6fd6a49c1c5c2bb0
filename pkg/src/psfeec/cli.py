"""Command-line front end.

Every subcommand writes a JSON report or a CSV table and exits with 0 when
all verdicts pass, 1 when a verdict fails and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .dofs import (DOF_FAMILIES, MIN_DEGREE, build_dofs, commute_residuals, dof_count_formula,
                   unisolvence_report)
from .exactness import SEQUENCES, div_preimage_algebraic, div_preimage_constructive, verify_sequence
from .globalspace import (GLOBAL_MIN_DEGREE, assemble_global, global_dimension_formula,
                          oracle_dimension, verify_global_exactness)
from .mesh import (MeshError, load_macro_mesh, powell_sabin_refine, random_split, reference_split,
                   unit_square_mesh)
from .spaces import build_space, dimension_table

log = logging.getLogger("psfeec")

COMMANDS = ("refine", "dims", "unisolvence", "commute", "exactness", "preimage",
            "global-dims", "global-exactness", "stokes")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    mesh: str | None = None
    degrees: tuple = ()
    selection: str | None = None
    tol_rank: float | None = None
    tol_residual: float | None = None
    out: str | None = None
    seed: int = 0
    threads: int = 1
    options: dict = field(default_factory=dict)


def _degree_range(text: str) -> tuple[int, ...]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return (int(text),)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad degree range {text!r}") from None


def _mesh(path: str | None):
    if path is None:
        return unit_square_mesh(1)
    p = Path(path)
    if p.suffix in (".node", ".ele"):
        return load_macro_mesh(p, format="node-ele")
    return load_macro_mesh(p)


def _write_json(path, report: dict) -> None:
    text = json.dumps(report, indent=1, sort_keys=True, default=_jsonable)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _write_csv(path, rows: list[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0])
    for row in rows:
        cols += [c for c in row if c not in cols]
    stream = sys.stdout if path is None else open(path, "w", newline="")
    try:
        w = csv.DictWriter(stream, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    finally:
        if path is not None:
            stream.close()


# ---------------------------------------------------------------------------
# subcommands


def cmd_refine(cfg: RunConfig) -> bool:
    sc = powell_sabin_refine(_mesh(cfg.mesh), interior_rule=cfg.options["rule"])
    _write_json(cfg.out, sc.to_json())
    return True


def cmd_dims(cfg: RunConfig) -> bool:
    rows = dimension_table(reference_split(), cfg.options["r_max"])
    for row in rows:
        row["tolerance"] = config.TOL.rank
    _write_csv(cfg.out, rows)
    return all(r["match"] is not False for r in rows)


def cmd_unisolvence(cfg: RunConfig) -> bool:
    fams = DOF_FAMILIES if cfg.selection in (None, "all") else (cfg.selection,)
    rng = np.random.default_rng(cfg.seed)
    splits = [("reference", reference_split())] + [
        (f"random {i}", random_split(rng)) for i in range(cfg.options["trials"])]
    entries = []
    for fam in fams:
        for r in cfg.degrees:
            if r < MIN_DEGREE[fam]:
                continue
            for name, split in splits:
                ds = build_dofs(split, fam, r)
                rep = unisolvence_report(build_space(split, fam, False, r), ds, config.TOL.rank).to_json()
                rep.update(split=name, count_formula=dof_count_formula(fam, r),
                           count_ok=len(ds) == dof_count_formula(fam, r))
                entries.append(rep)
    ok = all(e["pass"] and e["count_ok"] for e in entries)
    _write_json(cfg.out, {"tolerance": config.TOL.rank, "seed": cfg.seed, "pass": ok, "entries": entries})
    return ok


def cmd_commute(cfg: RunConfig) -> bool:
    tol = cfg.tol_residual if cfg.tol_residual is not None else 1e-9
    rng = np.random.default_rng(cfg.seed)
    split = reference_split()
    rows = []
    for r in cfg.degrees:
        for row in commute_residuals(split, cfg.selection, r, cfg.options["trials"], rng):
            row["max_residual"] = max(row["rot_residual"], row["div_residual"])
            row["tolerance"] = tol
            rows.append(row)
    _write_csv(cfg.out, rows)
    return all(r["max_residual"] <= tol for r in rows)


def cmd_exactness(cfg: RunConfig) -> bool:
    chains = list(SEQUENCES) if cfg.selection in (None, "all") else [cfg.selection]
    split = reference_split()
    reports = [verify_sequence(split, c, r).to_json() for c in chains for r in cfg.degrees]
    controls = []
    if "ring S-L-calV" in chains:
        for r in cfg.degrees:
            rep = verify_sequence(split, "ring S-L-calV", r, final="V2").to_json()
            rep["expected_deficit"] = 3
            controls.append(rep)
    ok = all(r["exact"] for r in reports) and all(c["deficit"] == 3 for c in controls)
    _write_json(cfg.out, {"tolerance": config.TOL.rank, "pass": ok, "sequences": reports,
                          "negative_controls": controls})
    return ok


def cmd_preimage(cfg: RunConfig) -> bool:
    tol = cfg.tol_residual if cfg.tol_residual is not None else 1e-8
    rng = np.random.default_rng(cfg.seed)
    split = reference_split()
    rows = []
    for r in cfg.degrees:
        dst = build_space(split, "calV2", True, r)
        src = build_space(split, "L1", True, r + 1)
        for t in range(cfg.options["trials"]):
            p = dst.random_element(rng)
            if cfg.options["backend"] == "constructive":
                res = div_preimage_constructive(p, split)
                v, resid, trace = res.v, res.residual, res.boundary_trace
            else:
                v = div_preimage_algebraic(p, src, dst)
                from .poly import divergence
                resid = float(np.abs((divergence(v) - p.elevate(v.degree - 1 - p.degree)).coeffs).max()
                              / max(np.abs(p.coeffs).max(), 1e-300))
                trace = 0.0
            rows.append({"r": r, "trial": t, "backend": cfg.options["backend"], "residual": resid,
                         "boundary_trace": trace, "tolerance": tol})
    ok = all(r["residual"] <= tol and r["boundary_trace"] <= 1e-9 for r in rows)
    if cfg.out and cfg.out.endswith(".json"):
        _write_json(cfg.out, {"pass": ok, "rows": rows})
    else:
        _write_csv(cfg.out, rows)
    return ok


def cmd_global_dims(cfg: RunConfig) -> bool:
    mesh = _mesh(cfg.mesh)
    sc = powell_sabin_refine(mesh)
    rows = []
    for r in cfg.degrees:
        for fam, d in (("S0", r), ("L1", r - 1), ("V2", r - 2), ("S1", r - 1), ("L2", r - 2)):
            if d < GLOBAL_MIN_DEGREE[fam]:
                continue
            gs = assemble_global(sc, fam, d, threads=cfg.threads)
            formula = global_dimension_formula(fam, d, mesh.nv, mesh.ne, mesh.nt)
            row = {"chain_r": r, "family": fam, "degree": d, "computed": gs.dim, "formula": formula,
                   "match": formula is None or formula == gs.dim}
            if cfg.options.get("oracle"):
                row["oracle"] = oracle_dimension(sc, fam, d)
                row["match"] = row["match"] and row["oracle"] == gs.dim
            row["tolerance"] = config.TOL.rank
            rows.append(row)
    _write_csv(cfg.out, rows)
    return all(r["match"] for r in rows)


def cmd_global_exactness(cfg: RunConfig) -> bool:
    sc = powell_sabin_refine(_mesh(cfg.mesh))
    reports = [verify_global_exactness(sc, r, cfg.selection) for r in cfg.degrees]
    ok = all(r["exact"] and r["dims_match"] for r in reports)
    _write_json(cfg.out, {"tolerance": config.TOL.rank, "pass": ok, "reports": reports})
    return ok


def cmd_stokes(cfg: RunConfig) -> bool:
    from .stokes import convergence_study

    r = cfg.degrees[0]
    base = _mesh(cfg.mesh)
    rows = convergence_study(cfg.selection, r, base, cfg.options["refine"], threads=cfg.threads)
    tol = cfg.tol_residual if cfg.tol_residual is not None else 1e-10
    table = []
    for row in rows:
        table.append({"h": row["h"], "dofs": row["dofs"], "velocity_l2_error": row["velocity_error"],
                      "pressure_l2_error": row["pressure_error"], "div_sup": row["div_sup"],
                      "infsup": row["infsup"], "velocity_order": row.get("velocity_order", ""),
                      "tolerance": tol})
    _write_csv(cfg.out, table)
    return all(row["div_sup"] <= tol * row["velocity_h1"] for row in rows)


HANDLERS = {
    "refine": cmd_refine, "dims": cmd_dims, "unisolvence": cmd_unisolvence, "commute": cmd_commute,
    "exactness": cmd_exactness, "preimage": cmd_preimage, "global-dims": cmd_global_dims,
    "global-exactness": cmd_global_exactness, "stokes": cmd_stokes,
}


# ---------------------------------------------------------------------------
# parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--tol-rank", type=float)
    common.add_argument("--tol-residual", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="psfeec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", parents=[common])
    p.add_argument("--mesh")
    p.add_argument("--rule", choices=("incenter", "barycenter"), default="incenter")

    p = sub.add_parser("dims", parents=[common])
    p.add_argument("--r-max", type=int, default=6)

    p = sub.add_parser("unisolvence", parents=[common])
    p.add_argument("--family", choices=DOF_FAMILIES + ("all",), default="all")
    p.add_argument("--r", type=_degree_range, default=(4,))
    p.add_argument("--trials", type=int, default=20)

    p = sub.add_parser("commute", parents=[common])
    p.add_argument("--which", choices=("thm1", "thm2"), default="thm1")
    p.add_argument("--r", type=_degree_range, default=(3,))
    p.add_argument("--trials", type=int, default=50)

    p = sub.add_parser("exactness", parents=[common])
    p.add_argument("--r", type=_degree_range, default=(3,))
    p.add_argument("--chains", choices=tuple(SEQUENCES) + ("all",), default="all")

    p = sub.add_parser("preimage", parents=[common])
    p.add_argument("--r", type=_degree_range, default=(2,))
    p.add_argument("--backend", choices=("constructive", "algebraic"), default="constructive")
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("global-dims", parents=[common])
    p.add_argument("--mesh")
    p.add_argument("--r", type=_degree_range, default=(2, 3, 4))
    p.add_argument("--oracle", action="store_true", help="also count by an independent nullspace")

    p = sub.add_parser("global-exactness", parents=[common])
    p.add_argument("--mesh")
    p.add_argument("--chain", choices=("SLV", "SSL"), default="SLV")
    p.add_argument("--r", type=_degree_range, default=(2,))

    p = sub.add_parser("stokes", parents=[common])
    p.add_argument("--mesh")
    p.add_argument("--pair", choices=("SLV", "SSL"), default="SLV")
    p.add_argument("--r", type=_degree_range, default=None)
    p.add_argument("--refine", type=int, default=3)
    return parser


def parse(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cmd = args.command
    selection = {"unisolvence": getattr(args, "family", None), "commute": getattr(args, "which", None),
                 "exactness": getattr(args, "chains", None), "global-exactness": getattr(args, "chain", None),
                 "stokes": getattr(args, "pair", None)}.get(cmd)
    degrees = getattr(args, "r", None)
    if cmd == "stokes" and degrees is None:
        degrees = (2 if args.pair == "SLV" else 3,)
    options = {k: getattr(args, k) for k in ("rule", "r_max", "trials", "backend", "oracle", "refine")
               if hasattr(args, k)}
    if args.threads < 1:
        raise UsageError("--threads must be positive")
    return RunConfig(cmd, getattr(args, "mesh", None), tuple(degrees or ()), selection,
                     args.tol_rank, args.tol_residual, args.out, args.seed, args.threads,
                     options | {"verbose": args.verbose})


def run(argv=None) -> int:
    try:
        cfg = parse(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    except UsageError as exc:
        print(f"psfeec: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if cfg.options.get("verbose") else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    saved = config.TOL
    config.set_tolerances(cfg.tol_rank, cfg.tol_residual)
    try:
        ok = HANDLERS[cfg.command](cfg)
    except (MeshError, FileNotFoundError) as exc:
        print(f"psfeec: {exc}", file=sys.stderr)
        return 2
    finally:
        config.TOL = saved
    if not ok:
        print(f"psfeec {cfg.command}: verdict failed", file=sys.stderr)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
