"""Stokes flow with the two divergence-free pairs.

SLV pair: velocities in global L1_{r-1}, pressures in the theta-constrained
V2_{r-2}.  SSL pair: velocities in global S1_{r-1}, pressures in L2_{r-2}.
The divergence of every discrete velocity lies in the pressure space, so
the Galerkin velocity is divergence-free pointwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import bernstein as bb
from .fields import SmoothField, X, Y
from .globalspace import GlobalSpace, assemble_global, global_project
from .linalg import nullspace, numerical_rank
from .mesh import SplitComplex, powell_sabin_refine, refine_uniform, unit_square_mesh
from .poly import PiecewisePolynomial, div_matrix, jet_rows, mass_matrix, stiffness_matrix
from .quadrature import segment_rule, triangle_rule
from .spaces import chebyshev01

import sympy as sp

log = logging.getLogger(__name__)

PAIRS = {"SLV": ("L1", "V2", 2), "SSL": ("S1", "L2", 3)}


class StokesError(RuntimeError):
    pass


@dataclass(frozen=True)
class StokesProblem:
    sc: SplitComplex
    pair: str = "SLV"
    r: int = 2
    viscosity: float = 1.0
    force: SmoothField | None = None
    boundary: SmoothField | None = None   # Dirichlet velocity, zero if None

    def __post_init__(self):
        if self.pair not in PAIRS:
            raise StokesError(f"unknown pair {self.pair!r}")
        if self.r < PAIRS[self.pair][2]:
            raise StokesError(f"{self.pair} pair needs r >= {PAIRS[self.pair][2]}")
        if self.boundary is not None:
            flux = boundary_flux(self.sc, self.boundary)
            if abs(flux) > 1e-10:
                raise StokesError(f"boundary data has net flux {flux:.3e}")


def boundary_flux(sc: SplitComplex, g: SmoothField) -> float:
    mesh = sc.mesh
    total = 0.0
    for e in np.nonzero(mesh.boundary_edges)[0]:
        t = mesh.edge_triangles[e][0]
        tri = mesh.triangles[t]
        u, v = mesh.edges[e]
        w = [x for x in tri if x not in (u, v)][0]
        a, b = mesh.vertices[u], mesh.vertices[v]
        n = np.array([b[1] - a[1], a[0] - b[0]])
        n = n / np.linalg.norm(n)
        if np.dot(n, mesh.vertices[w] - a) > 0:
            n = -n
        x, wq, _ = segment_rule(a, b, 20)
        total += float(wq @ (g(x) @ n))
    return total


def boundary_subedges(sc: SplitComplex) -> list[tuple[int, int, int]]:
    """Sub-edges on the domain boundary as ``(sub, p, q)`` point ids."""
    owners: dict = {}
    for s, tri in enumerate(sc.subtriangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            owners.setdefault((min(a, b), max(a, b)), []).append(s)
    return [(ss[0], e[0], e[1]) for e, ss in sorted(owners.items()) if len(ss) == 1]


def trace_matrix(sc: SplitComplex, r: int, ncomp: int) -> sps.csr_matrix:
    t = chebyshev01(r + 1)
    rows = []
    for s, p, q in boundary_subedges(sc):
        a, b = sc.points[p], sc.points[q]
        x = a[None] + t[:, None] * (b - a)[None]
        J = jet_rows(sc.tris, r, ncomp, s, x)[:, :, 0]
        rows.append(sps.csr_matrix(J.reshape(-1, J.shape[-1])))
    return sps.vstack(rows, format="csr")


def homogeneous_basis(vel: GlobalSpace) -> tuple[sps.csr_matrix, str]:
    """Coefficient basis of velocities with zero boundary trace.

    Columns without a boundary trace are kept.  The remaining columns are
    dropped when their traces are independent, otherwise their trace
    kernel is added back.
    """
    tr = trace_matrix(vel.sc, vel.degree, vel.ncomp) @ vel.G
    tr = tr.toarray()
    scale = max(np.abs(tr).max(), 1e-300)
    touched = np.nonzero(np.abs(tr).max(axis=0) > 1e-12 * scale)[0]
    keep = np.setdiff1d(np.arange(vel.dim), touched)
    Z = vel.G[:, keep]
    if numerical_rank(tr[:, touched], what="boundary trace") == len(touched):
        return Z.tocsr(), "dropped"
    ker = nullspace(tr[:, touched], what="boundary trace kernel")
    extra = sps.csr_matrix(vel.G[:, touched] @ ker)
    return sps.hstack([Z, extra], format="csr"), "kernel"


def pressure_columns(pre: GlobalSpace) -> np.ndarray:
    """Pressure basis columns compatible with zero boundary velocity.

    For V2 the value jumps at boundary split points are dropped: a
    continuous velocity vanishing on a boundary edge has continuous
    divergence at the split point of that edge.
    """
    bedges = set(np.nonzero(pre.sc.mesh.boundary_edges)[0].tolist())
    out = [i for i, k in enumerate(pre.keys)
           if not (pre.family == "V2" and k[0] == "edge" and k[1] in bedges and k[2] == "jump-of-value")]
    return np.array(out, dtype=int)


@dataclass
class Discretization:
    problem: StokesProblem
    velocity: GlobalSpace
    pressure: GlobalSpace
    Z: sps.csr_matrix = field(repr=False)      # velocity coefficients, zero trace
    P: sps.csr_matrix = field(repr=False)      # pressure coefficients
    A: sps.csr_matrix = field(repr=False)
    B: sps.csr_matrix = field(repr=False)      # (pressure, velocity): int q div v
    Mp: sps.csr_matrix = field(repr=False)
    mean: np.ndarray = field(repr=False)
    dirichlet: str = ""

    @property
    def ndofs(self) -> int:
        return self.Z.shape[1] + self.P.shape[1]


def discretize(p: StokesProblem, check: bool = True, threads: int = 1) -> Discretization:
    vfam, pfam, _ = PAIRS[p.pair]
    sc = p.sc
    vel = assemble_global(sc, vfam, p.r - 1, threads=threads)
    pre = assemble_global(sc, pfam, p.r - 2, threads=threads)
    Z, how = homogeneous_basis(vel)
    P = pre.G[:, pressure_columns(pre)].tocsr()
    K = stiffness_matrix(sc.tris, p.r - 1, 2)
    Mq = mass_matrix(sc.tris, p.r - 2, 1)
    D = div_matrix(sc.tris, p.r - 1, sparse=True)
    A = (p.viscosity * (Z.T @ K @ Z)).tocsr()
    B = (P.T @ Mq @ D @ Z).tocsr()
    Mp = (P.T @ Mq @ P).tocsr()
    mean = np.asarray(P.T @ (Mq @ np.ones(Mq.shape[0]))).ravel()
    d = Discretization(p, vel, pre, Z, P, A, B, Mp, mean, how)
    if check:
        check_pair(d)
    return d


def check_pair(d: Discretization, rtol: float = 1e-9) -> dict:
    """Check that div maps the velocities onto the mean-zero pressures."""
    sc = d.problem.sc
    img = div_matrix(sc.tris, d.velocity.degree, sparse=True) @ d.Z
    Pd = d.P.toarray()
    img = img.toarray()
    coords, *_ = np.linalg.lstsq(Pd, img, rcond=None)
    scale = max(np.abs(img).max(), 1e-300)
    fit = float(np.abs(Pd @ coords - img).max() / scale)
    rank = numerical_rank(coords, what="discrete divergence")
    out = {"fit_residual": fit, "rank": rank, "pressure_dim": Pd.shape[1]}
    if fit > rtol or rank != Pd.shape[1] - 1:
        raise StokesError(f"div of the velocity space is not the mean-zero pressure space: {out}")
    return out


def load_vector(tris: np.ndarray, r: int, f: SmoothField, qdeg: int) -> np.ndarray:
    nb = bb.dim(r)
    out = np.zeros((len(tris), f.ncomp, nb))
    for s, tri in enumerate(tris):
        x, w, lam = triangle_rule(tri, qdeg)
        b = bb.basis(r, lam)
        out[s] = (f(x) * w[:, None]).T @ b
    return out.ravel()


@dataclass
class StokesSolution:
    velocity: PiecewisePolynomial
    pressure: PiecewisePolynomial
    disc: Discretization = field(repr=False)
    ucoords: np.ndarray = field(repr=False)
    pcoords: np.ndarray = field(repr=False)

    def div_sup(self) -> float:
        """Largest Bernstein coefficient of div u_h, an upper bound on its sup norm."""
        v = self.velocity
        return float(np.abs(div_matrix(v.tris, v.degree, sparse=True) @ v.vector).max())

    def h1_norm(self) -> float:
        v = self.velocity
        k = stiffness_matrix(v.tris, v.degree, 2)
        m = mass_matrix(v.tris, v.degree, 2)
        x = v.vector
        return float(np.sqrt(x @ (k @ x) + x @ (m @ x)))


def solve_stokes(p: StokesProblem, disc: Discretization | None = None,
                 refinement_steps: int = 2) -> StokesSolution:
    """Direct sparse solve with a few steps of iterative refinement."""
    d = disc if disc is not None else discretize(p)
    sc = p.sc
    rv = p.r - 1
    nu, npr = d.Z.shape[1], d.P.shape[1]
    rhs_u = np.zeros(nu)
    lift = np.zeros(d.Z.shape[0])
    if p.force is not None:
        rhs_u = d.Z.T @ load_vector(sc.tris, rv, p.force, 2 * rv + 8)
    rhs_p = np.zeros(npr)
    if p.boundary is not None:
        lift = global_project(sc, "pi1" if p.pair == "SLV" else "chi1", rv, p.boundary).vector
        K = stiffness_matrix(sc.tris, rv, 2)
        Mq = mass_matrix(sc.tris, p.r - 2, 1)
        D = div_matrix(sc.tris, rv, sparse=True)
        rhs_u = rhs_u - p.viscosity * (d.Z.T @ (K @ lift))
        rhs_p = -(d.P.T @ (Mq @ (D @ lift)))
    m = sps.csr_matrix(d.mean[:, None])
    S = sps.bmat([[d.A, -d.B.T, None], [-d.B, None, m], [None, m.T, None]], format="csc")
    rhs = np.concatenate([rhs_u, -rhs_p, [0.0]])
    try:
        lu = spla.splu(S)
    except RuntimeError as exc:
        raise StokesError(f"singular saddle-point system: {exc}") from None
    sol = lu.solve(rhs)
    for _ in range(refinement_steps):
        sol = sol + lu.solve(rhs - S @ sol)
    if not np.all(np.isfinite(sol)):
        raise StokesError("singular saddle-point system")
    res = np.linalg.norm(S @ sol - rhs) / max(np.linalg.norm(rhs), 1.0)
    if res > 1e-8:
        raise StokesError(f"saddle-point residual {res:.2e}")
    uc, pc = sol[:nu], sol[nu:nu + npr]
    u = PiecewisePolynomial.from_vector(sc.tris, rv, d.Z @ uc + lift, 2)
    q = PiecewisePolynomial.from_vector(sc.tris, p.r - 2, d.P @ pc, 1)
    return StokesSolution(u, q, d, uc, pc)


def l2_error(f: PiecewisePolynomial, exact: SmoothField | None, qdeg: int = 12,
             remove_mean: bool = False) -> float:
    """L2 norm of ``f - exact``; optionally both means are removed first."""
    total, fm, em, area = 0.0, 0.0, 0.0, 0.0
    pieces = []
    for s, tri in enumerate(f.tris):
        x, w, lam = triangle_rule(tri, qdeg)
        fv = f.evaluate(lam, s)
        ev = exact(x) if exact is not None else np.zeros_like(fv)
        pieces.append((w, fv, ev))
        fm += w @ fv[:, 0]
        em += w @ ev[:, 0]
        area += w.sum()
    shift_f = fm / area if remove_mean else 0.0
    shift_e = em / area if remove_mean else 0.0
    for w, fv, ev in pieces:
        total += float(w @ np.sum((fv - shift_f - ev + shift_e) ** 2, axis=1))
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# inf-sup


def infsup_value(d: Discretization) -> float:
    """Smallest generalized singular value of the divergence on mean-zero pressures."""
    A = d.A.toarray()
    B = d.B.toarray()
    N = nullspace(d.mean[None, :], n=len(d.mean), what="mean-zero pressures")
    S = N.T @ B @ np.linalg.solve(A, B.T) @ N
    M = N.T @ d.Mp.toarray() @ N
    lam = sla.eigh(S, M, eigvals_only=True)
    return float(np.sqrt(max(lam.min(), 0.0)))


def full_v2_discretization(p: StokesProblem) -> Discretization:
    """Negative control: SLV velocities against all piecewise polynomials of degree r - 2."""
    d = discretize(p, check=False)
    n = mass_matrix(p.sc.tris, p.r - 2, 1).shape[0]
    P = sps.identity(n, format="csr")
    Mq = mass_matrix(p.sc.tris, p.r - 2, 1)
    D = div_matrix(p.sc.tris, p.r - 1, sparse=True)
    B = (Mq @ D @ d.Z).tocsr()
    mean = np.asarray(Mq @ np.ones(n)).ravel()
    return Discretization(p, d.velocity, d.pressure, d.Z, P, d.A, B, Mq.tocsr(), mean, d.dirichlet)


def infsup_estimate(pair: str, meshes, r: int | None = None, control: bool = False) -> dict:
    """Inf-sup values on a sequence of meshes.

    ``control`` swaps in the full discontinuous pressure space.
    """
    r = PAIRS[pair][2] if r is None else r
    values = []
    for mesh in meshes:
        prob = StokesProblem(powell_sabin_refine(mesh), pair, r)
        d = full_v2_discretization(prob) if control else discretize(prob)
        values.append(infsup_value(d))
    vmin, vmax = min(values), max(values)
    return {"pair": pair, "r": r, "control": control, "values": values,
            "ratio": vmax / vmin if vmin > 0 else float("inf"),
            "nondegenerate": vmin > 1e-3}


# ---------------------------------------------------------------------------
# manufactured solution


def manufactured(viscosity: float = 1.0) -> tuple[SmoothField, SmoothField, SmoothField]:
    """Velocity, pressure and body force of the standard test flow on the unit square."""
    psi = SmoothField.scalar(X**2 * Y**2 * (1 - X) ** 2 * (1 - Y) ** 2)
    u = psi.rot()
    p = SmoothField.scalar(X**3 - sp.Rational(1, 4))
    f = u.laplacian().scale(-viscosity) + p.grad()
    return u, p, f


def mesh_size(mesh) -> float:
    e = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    return float(np.linalg.norm(e, axis=1).max())


def convergence_study(pair: str = "SLV", r: int | None = None, base=None, refinements: int = 3,
                      viscosity: float = 1.0, infsup: bool = True, threads: int = 1) -> list[dict]:
    """Manufactured-solution errors on ``refinements`` uniform refinements of ``base``.

    ``base`` defaults to the two-triangle unit square.  When the exact
    velocity does not vanish on the boundary of ``base`` it is imposed as
    Dirichlet data.
    """
    r = PAIRS[pair][2] if r is None else r
    u, p, f = manufactured(viscosity)
    mesh = unit_square_mesh(1) if base is None else base
    rows = []
    for level in range(1, refinements + 1):
        mesh = refine_uniform(mesh)
        sc = powell_sabin_refine(mesh)
        g = u if _boundary_sup(sc, u) > 1e-12 else None
        prob = StokesProblem(sc, pair, r, viscosity, f, g)
        d = discretize(prob, threads=threads)
        sol = solve_stokes(prob, d)
        row = {"level": level, "h": mesh_size(mesh), "dofs": d.ndofs,
               "velocity_error": l2_error(sol.velocity, u, 2 * r + 8),
               "pressure_error": l2_error(sol.pressure, p, 2 * r + 8, remove_mean=True),
               "div_sup": sol.div_sup(), "velocity_h1": sol.h1_norm(),
               "infsup": infsup_value(d) if infsup else float("nan")}
        rows.append(row)
        log.info("%s level %d: %s", pair, level, row)
    for a, b in zip(rows, rows[1:]):
        b["velocity_order"] = float(np.log(a["velocity_error"] / b["velocity_error"]) / np.log(a["h"] / b["h"]))
        b["pressure_order"] = float(np.log(a["pressure_error"] / b["pressure_error"]) / np.log(a["h"] / b["h"]))
    return rows


def _boundary_sup(sc: SplitComplex, u: SmoothField) -> float:
    pts = []
    for _, p, q in boundary_subedges(sc):
        a, b = sc.points[p], sc.points[q]
        pts.append(a[None] + np.linspace(0, 1, 5)[:, None] * (b - a)[None])
    return float(np.abs(u(np.vstack(pts))).max())


def square_sequence(refinements: int = 3):
    """The two-triangle square refined uniformly 1..refinements times."""
    out, mesh = [], unit_square_mesh(1)
    for _ in range(refinements):
        mesh = refine_uniform(mesh)
        out.append(mesh)
    return out
