"""Global spaces on a Powell-Sabin refined mesh.

A global space is spanned by sums of local nodal functions that share a
degree-of-freedom key.  Fields on the whole mesh are piecewise
polynomials over all ``6T`` subtriangles, macro by macro.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .dofs import CHAINS, DofError, projector
from .exactness import elevation_block
from .fields import SmoothField, X, Y
from .linalg import nullspace, numerical_rank
from .mesh import SplitComplex, singular_fans
from .poly import PiecewisePolynomial, div_matrix, jet_rows, n_coeffs, rot_matrix
from .spaces import chebyshev01, ncomp_of

import sympy as sp

log = logging.getLogger(__name__)

GLOBAL_FAMILIES = ("S0", "L1", "V2", "S1", "L2")
GLOBAL_MIN_DEGREE = {"S0": 2, "L1": 1, "V2": 0, "S1": 2, "L2": 1}
FAMILY_CHAIN = {"S0": "Pi0", "L1": "Pi1", "V2": "Pi2", "S1": "varpi1", "L2": "varpi2"}
GLOBAL_CHAINS = {"pi0": "Pi0", "pi1": "Pi1", "pi2": "Pi2", "chi1": "varpi1", "chi2": "varpi2"}


class OrientationError(RuntimeError):
    """Two macro-triangles disagree on a shared functional."""


@dataclass(frozen=True)
class GlobalSpace:
    sc: SplitComplex
    family: str
    degree: int
    keys: tuple
    G: sps.csr_matrix = field(repr=False)   # (6T * local coeffs, dim)

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @property
    def ncomp(self) -> int:
        return ncomp_of(self.family)

    @property
    def name(self) -> str:
        return f"global {self.family}_{self.degree}"

    def element(self, coords: np.ndarray) -> PiecewisePolynomial:
        return PiecewisePolynomial.from_vector(self.sc.tris, self.degree, self.G @ coords, self.ncomp)

    def key_index(self) -> dict:
        return {k: i for i, k in enumerate(self.keys)}

    def boundary_keys(self) -> np.ndarray:
        """Indices of keys attached to boundary vertices or boundary edges."""
        mesh = self.sc.mesh
        bv = set(np.nonzero(mesh.boundary_vertices())[0].tolist())
        out = []
        for i, k in enumerate(self.keys):
            if (k[0] == "vertex" and k[1] in bv) or (k[0] in ("edge", "half-edge") and mesh.boundary_edges[k[1]]):
                out.append(i)
        return np.array(out, dtype=int)


def _check_degree(family, r):
    if family not in GLOBAL_FAMILIES:
        raise DofError(f"no global space for family {family!r}")
    if r < GLOBAL_MIN_DEGREE[family]:
        raise DofError(f"degree {r} is not admissible for global {family} "
                       f"(need r >= {GLOBAL_MIN_DEGREE[family]})")


_PROBE = SmoothField.vector(sp.exp(0.3 * X - 0.2 * Y) + X * Y, sp.cos(X + 0.5 * Y) - Y**2)


def assemble_global(sc: SplitComplex, family: str, r: int, check_orientation: bool = True,
                    threads: int = 1) -> GlobalSpace:
    """Glue local nodal functions by key.

    Local projectors may be built on ``threads`` workers; the reduction
    runs in macro order, so the result does not depend on ``threads``.
    """
    _check_degree(family, r)
    build = lambda m: projector(sc.local(m), FAMILY_CHAIN[family], r)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            projs = list(ex.map(build, range(sc.mesh.nt)))
    else:
        projs = [build(m) for m in range(sc.mesh.nt)]
    ncomp = ncomp_of(family)
    nloc = n_coeffs(6, r, ncomp)
    index: dict = {}
    rows, cols, vals = [], [], []
    probe_vals: dict = {}
    probe = _PROBE if ncomp == 2 else SmoothField.scalar(_PROBE.exprs[0])
    for m in range(sc.mesh.nt):
        P = projs[m]
        keys = P.dofs.keys()
        if check_orientation:
            pv = P.dofs.apply(probe)
        for j, key in enumerate(keys):
            if key not in index:
                index[key] = len(index)
                if check_orientation:
                    probe_vals[key] = pv[j]
            elif check_orientation and abs(probe_vals[key] - pv[j]) > 1e-10 * max(1.0, abs(pv[j])):
                raise OrientationError(f"macro {m} disagrees on {key}: {pv[j]} vs {probe_vals[key]}")
            col = np.nonzero(P.nodal[:, j])[0]
            rows.append(m * nloc + col)
            cols.append(np.full(len(col), index[key]))
            vals.append(P.nodal[col, j])
    G = sps.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(sc.mesh.nt * nloc, len(index)))
    keys = tuple(sorted(index, key=index.get))
    return GlobalSpace(sc, family, r, keys, G)


def global_dimension_formula(family: str, r: int, V: int, E: int, T: int) -> int | None:
    """Vertex/edge/triangle counts, with ``r`` the degree of the space itself."""
    if r < GLOBAL_MIN_DEGREE.get(family, 0):
        return None
    if family == "S0":
        return 3 * V + (4 * r - 8) * E + 3 * (r - 2) * (r - 3) * T
    q = r + 1 if family in ("L1", "S1") else r + 2
    if family == "L1":
        return 2 * V + (4 * q - 6) * E + 3 * (q - 2) * (q - 3) * T + (3 * (q - 1) * q - 4) * T
    if family == "V2":
        return E + T + (3 * (q - 1) * q - 4) * T
    if family == "S1":
        return 3 * V + (6 * q - 12) * E + 6 * (q - 2) * (q - 3) * T
    if family == "L2":
        return V + (2 * q - 5) * E + T + 3 * (q - 2) * (q - 3) * T
    return None


# ---------------------------------------------------------------------------
# independent oracle: continuity constraints on the whole refined mesh


def shared_subedges(sc: SplitComplex) -> list[tuple[int, int, int, int]]:
    """Pairs of subtriangles sharing an edge, as ``(s1, s2, p, q)`` point ids."""
    owners: dict = {}
    for s, tri in enumerate(sc.subtriangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            owners.setdefault((min(a, b), max(a, b)), []).append(s)
    return [(ss[0], ss[1], e[0], e[1]) for e, ss in sorted(owners.items()) if len(ss) == 2]


def theta_rows(sc: SplitComplex, r: int) -> np.ndarray:
    fans = singular_fans(sc)
    tris = sc.tris
    rows = []
    for z, ks in sorted(fans.items()):
        if len(ks) != 4:
            continue
        row = np.zeros(n_coeffs(len(tris), r, 1))
        for sign, s in zip((1, -1, 1, -1), ks):
            row += sign * jet_rows(tris, r, 1, s, sc.points[z])[0, 0, 0]
        rows.append(row)
    return np.array(rows).reshape(-1, n_coeffs(len(tris), r, 1))


def global_constraints(sc: SplitComplex, family: str, r: int) -> np.ndarray:
    ncomp = ncomp_of(family)
    tris = sc.tris
    if family == "V2":
        return theta_rows(sc, r)
    t = chebyshev01(r + 1)
    rows = []
    for s1, s2, p, q in shared_subedges(sc):
        a, b = sc.points[p], sc.points[q]
        x = a[None] + t[:, None] * (b - a)[None]
        J = jet_rows(tris, r, ncomp, s1, x) - jet_rows(tris, r, ncomp, s2, x)
        for i in range(len(x)):
            rows.append(J[i, :, 0])
            if family == "S0":
                rows.append(J[i, 0, 1:3])
            if family == "S1":
                rows.append((J[i, 0, 1] + J[i, 1, 2])[None])
    return np.vstack(rows)


def oracle_dimension(sc: SplitComplex, family: str, r: int) -> int:
    c = global_constraints(sc, family, r)
    return nullspace(c, n=n_coeffs(sc.n_sub, r, ncomp_of(family)), what=f"global {family}_{r}").shape[1]


def conformity_residual(gs: GlobalSpace) -> float:
    """Largest violation of the family's inter-element conditions by basis columns."""
    c = global_constraints(gs.sc, gs.family, gs.degree)
    if c.size == 0:
        return 0.0
    norms = np.linalg.norm(c, axis=1)
    c = c[norms > 0] / norms[norms > 0, None]
    m = c @ gs.G.toarray()
    return float(np.abs(m).max() / max(np.abs(gs.G).max(), 1e-300))


# ---------------------------------------------------------------------------
# theta_z and projections


def theta_z(q: PiecewisePolynomial, sc: SplitComplex, z: int) -> float:
    """Alternating sum of the values of ``q`` at ``z`` over its four fan subtriangles."""
    fans = singular_fans(sc)
    if z not in fans or len(fans[z]) != 4:
        raise ValueError(f"point {z} is not an interior split point")
    vals = [q.evaluate_at(sc.points[z], s)[0, 0] for s in fans[z]]
    return float(vals[0] - vals[1] + vals[2] - vals[3])


def restrict(f, m: int):
    """Restriction of a global piecewise polynomial to macro ``m`` (other inputs pass through)."""
    if isinstance(f, PiecewisePolynomial):
        return PiecewisePolynomial(f.tris[6 * m:6 * m + 6], f.degree, f.coeffs[6 * m:6 * m + 6])
    return f


def global_project(sc: SplitComplex, chain: str, r: int, f) -> PiecewisePolynomial:
    """Apply the local projection macro by macro; ``chain`` in pi0..chi2 (or local names)."""
    local = GLOBAL_CHAINS.get(chain, chain)
    if local not in CHAINS:
        raise DofError(f"unknown projection {chain!r}")
    blocks = []
    ncomp = None
    for m in range(sc.mesh.nt):
        P = projector(sc.local(m), local, r)
        blocks.append(P.coefficients(restrict(f, m)))
        ncomp = P.space.ncomp
    return PiecewisePolynomial.from_vector(sc.tris, r, np.concatenate(blocks), ncomp)


def dof_values(gs: GlobalSpace, f) -> np.ndarray:
    """Global degree-of-freedom values of ``f`` (applied macro by macro)."""
    out = np.full(gs.dim, np.nan)
    idx = gs.key_index()
    for m in range(gs.sc.mesh.nt):
        P = projector(gs.sc.local(m), FAMILY_CHAIN[gs.family], gs.degree)
        vals = P.dofs.apply(restrict(f, m))
        for key, v in zip(P.dofs.keys(), vals):
            out[idx[key]] = v
    return out


def coordinates(gs: GlobalSpace, f: PiecewisePolynomial) -> tuple[np.ndarray, float]:
    """Least-squares coordinates of ``f`` in the global basis and the fit residual."""
    vec = f.elevate(gs.degree - f.degree).vector
    Gd = gs.G.toarray()
    x, *_ = np.linalg.lstsq(Gd, vec, rcond=None)
    return x, float(np.linalg.norm(Gd @ x - vec) / max(np.linalg.norm(vec), 1e-300))


# ---------------------------------------------------------------------------
# exactness on the mesh


CHAIN_FAMILIES = {"SLV": ("S0", "L1", "V2"), "SSL": ("S0", "S1", "L2")}


def _image_coords(op, src: GlobalSpace, dst: GlobalSpace):
    tris = src.sc.tris
    d = rot_matrix(tris, src.degree, sparse=True) if op == "rot" else div_matrix(tris, src.degree, sparse=True)
    img = d @ src.G
    deg = max(src.degree - 1, 0)
    img = (elevation_block(len(tris), dst.ncomp, deg, dst.degree - deg) @ img).toarray()
    Gd = dst.G.toarray()
    x, *_ = np.linalg.lstsq(Gd, img, rcond=None)
    res = float(np.abs(Gd @ x - img).max() / max(np.abs(img).max(), 1e-300)) if img.size else 0.0
    return x, res


def verify_global_exactness(sc: SplitComplex, r: int, chain: str = "SLV") -> dict:
    fams = CHAIN_FAMILIES[chain]
    min_r = 2 if chain == "SLV" else 3
    if r < min_r:
        raise DofError(f"{chain} chain needs r >= {min_r}")
    V, E, T = sc.mesh.nv, sc.mesh.ne, sc.mesh.nt
    spaces = [assemble_global(sc, f, d) for f, d in zip(fams, (r, r - 1, r - 2))]
    R, res_r = _image_coords("rot", spaces[0], spaces[1])
    D, res_d = _image_coords("div", spaces[1], spaces[2])
    rank_rot = numerical_rank(R, what="global rot")
    rank_div = numerical_rank(D, what="global div")
    dims = [s.dim for s in spaces]
    formulas = [global_dimension_formula(s.family, s.degree, V, E, T) for s in spaces]
    kernel_rot = dims[0] - rank_rot
    kernel_div = dims[1] - rank_div
    comp = float(np.abs(D @ R).max()) if R.size and D.size else 0.0
    report = {
        "chain": chain, "r": r, "V": V, "E": E, "T": T, "euler": V - E + T,
        "families": [f"{s.family}_{s.degree}" for s in spaces],
        "dims": dims, "formulas": formulas,
        "dims_match": all(f is None or f == d for f, d in zip(formulas, dims)),
        "rank_rot": rank_rot, "kernel_rot": kernel_rot, "rank_div": rank_div,
        "kernel_div": kernel_div, "rot_fit_residual": res_r, "div_fit_residual": res_d,
        "composition": comp,
        "surjectivity_deficit": dims[2] - rank_div,
        "cohomology_deficit": kernel_div - rank_rot,
    }
    report["exactness_deficit"] = report["surjectivity_deficit"] + report["cohomology_deficit"]
    report["exact"] = (kernel_rot == 1 and report["exactness_deficit"] == 0 and comp <= 1e-9
                       and res_r <= 1e-9 and res_d <= 1e-9)
    return report
