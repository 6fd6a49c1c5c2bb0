"""Degrees of freedom, dual bases and commuting local projections.

A functional is stored as a weighted sum of first-order jets (value,
d/dx, d/dy of every component) at points tagged with a subtriangle.
Point functionals use one point, moments use quadrature points, and
jumps use the same point in two subtriangles with opposite weights.
The same data therefore acts on piecewise polynomials (through Bernstein
jet rows) and on smooth fields (through their closed-form jets).

All directional quantities on macro edges use the canonical frame of the
edge (tangent from the lower to the higher global vertex index), so a
functional on a shared edge is literally the same functional from both
sides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from numpy.polynomial import legendre as npleg

from .mesh import MacroSplit
from .poly import PiecewisePolynomial, jet_rows, n_coeffs
from .quadrature import segment_rule, triangle_rule
from .spaces import FESpace, build_space, ncomp_of

log = logging.getLogger(__name__)

DOF_FAMILIES = ("S0", "L1", "V2", "S1", "L2")
MIN_DEGREE = {"S0": 2, "L1": 1, "V2": 0, "S1": 1, "L2": 0}
SMOOTH_QUAD_DEGREE = 16


class DofError(ValueError):
    pass


# ---------------------------------------------------------------------------
# one-dimensional pieces


def psi_polynomial(r: int) -> sp.Poly:
    """Degree ``r`` polynomial with psi(0)=1, psi(1)=0, orthogonal to P_{r-2}."""
    if r < 1:
        raise DofError("psi needs r >= 1")
    x = sp.Symbol("x")
    c = sp.symbols(f"c0:{r + 1}")
    psi = sum(c[j] * x**j for j in range(r + 1))
    eqs = [psi.subs(x, 0) - 1, psi.subs(x, 1)]
    eqs += [sp.integrate(psi * x**k, (x, 0, 1)) for k in range(r - 1)]
    sol = sp.solve(eqs, c, dict=True)
    if len(sol) != 1:
        raise DofError(f"psi system for r={r} is not uniquely solvable")
    p = sp.Poly(psi.subs(sol[0]), x)
    if p.diff(x).eval(0) == 0:
        raise DofError(f"psi'(0) vanishes for r={r}")
    return p


@dataclass(frozen=True)
class EdgeDofs:
    """Functionals on C^1 splines of degree ``r`` on ``[a, b]`` with break ``m``.

    Each piece is expanded in monomials of its own local variable
    ``s in [0, 1]``; ``rows`` act on the stacked 2(r+1) coefficients.
    """

    r: int
    variant: str
    a: float
    m: float
    b: float
    labels: tuple
    rows: np.ndarray

    def __len__(self):
        return len(self.labels)


def _piece_rows(r, lo, hi, x, deriv=0):
    s = (np.atleast_1d(x) - lo) / (hi - lo)
    j = np.arange(r + 1)
    if deriv == 0:
        return s[:, None] ** j
    return j * s[:, None] ** np.maximum(j - 1, 0) / (hi - lo)


def c1_spline_constraints(r: int, a: float, m: float, b: float) -> np.ndarray:
    n = r + 1
    rows = np.zeros((2, 2 * n))
    rows[0, :n] = _piece_rows(r, a, m, m)[0]
    rows[0, n:] = -_piece_rows(r, m, b, m)[0]
    if r >= 1:
        rows[1, :n] = _piece_rows(r, a, m, m, 1)[0]
        rows[1, n:] = -_piece_rows(r, m, b, m, 1)[0]
    return rows


def edge_c1_dofs(r: int, variant: str = "edge2", a: float = 0.0, m: float = 0.4,
                 b: float = 1.0) -> EdgeDofs:
    if r < 1:
        raise DofError("C^1 edge splines need r >= 1")
    if variant not in ("edge1", "edge2"):
        raise DofError(f"unknown variant {variant!r}")
    if not a < m < b:
        raise DofError("need a < m < b")
    n = r + 1
    rows, labels = [], []

    def point(x, deriv, label):
        row = np.zeros(2 * n)
        if x <= m:
            row[:n] = _piece_rows(r, a, m, x, deriv)[0]
        else:
            row[n:] = _piece_rows(r, m, b, x, deriv)[0]
        rows.append(row)
        labels.append(label)

    def moments(kmax):
        t, w = np.polynomial.legendre.leggauss(r + kmax + 2)
        t = 0.5 * (t + 1)
        w = 0.5 * w
        for piece, (lo, hi) in enumerate(((a, m), (m, b))):
            x = lo + t * (hi - lo)
            for k in range(kmax + 1):
                q = npleg.legval(2 * t - 1, np.eye(kmax + 1)[k])
                row = np.zeros(2 * n)
                row[piece * n:(piece + 1) * n] = (w * q * (hi - lo)) @ _piece_rows(r, lo, hi, x)
                rows.append(row)
                labels.append(f"moment piece {piece} P{k}")

    point(a, 0, "z(a)")
    point(b, 0, "z(b)")
    if variant == "edge1":
        if r >= 2:
            point(a, 1, "z'(a)")
            point(b, 1, "z'(b)")
        if r >= 3:
            point(m, 0, "z(m)")
            point(m, 1, "z'(m)")
        if r >= 4:
            moments(r - 4)
    elif r >= 2:
        moments(r - 2)
    return EdgeDofs(r, variant, a, m, b, tuple(labels), np.array(rows))


def edge_unisolvence(d: EdgeDofs) -> tuple[float, float]:
    """Extreme singular values of the DOF matrix on a basis of W_r."""
    from .linalg import nullspace

    basis = nullspace(c1_spline_constraints(d.r, d.a, d.m, d.b), what="W_r")
    if basis.shape[1] != 2 * d.r:
        raise DofError(f"W_{d.r} has dimension {basis.shape[1]}, expected {2 * d.r}")
    if len(d) != basis.shape[1]:
        raise DofError(f"{len(d)} functionals for a space of dimension {basis.shape[1]}")
    s = np.linalg.svd(d.rows @ basis, compute_uv=False)
    return float(s.min()), float(s.max())


# ---------------------------------------------------------------------------
# functionals on a split


@dataclass(frozen=True)
class LinearFunctional:
    kind: str
    key: tuple     # identifies the functional globally
    anchor: tuple  # ("vertex", i) | ("split-point", k) | ("edge", k) | ("half-edge", k, h) | ("macro",)
    label: str


@dataclass(frozen=True)
class _Group:
    points: np.ndarray   # (P, 2)
    subs: np.ndarray     # (P,)
    weights: np.ndarray  # (F, P, ncomp, 3)
    owners: np.ndarray   # (F,) functional indices


@dataclass(frozen=True)
class DofSet:
    family: str
    degree: int
    split: MacroSplit
    functionals: tuple
    groups: tuple = field(repr=False)
    test_spaces: dict = field(repr=False, default_factory=dict)
    _rows: dict = field(repr=False, default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.functionals)

    @property
    def ncomp(self) -> int:
        return ncomp_of(self.family)

    def rows(self, degree: int | None = None) -> np.ndarray:
        """Matrix of the functionals on Bernstein coefficients of the given degree."""
        degree = self.degree if degree is None else degree
        if degree in self._rows:
            return self._rows[degree]
        tris = self.split.tris
        out = np.zeros((len(self), n_coeffs(6, degree, self.ncomp)))
        for g in self.groups:
            for s in np.unique(g.subs):
                idx = np.nonzero(g.subs == s)[0]
                jr = jet_rows(tris, degree, self.ncomp, int(s), g.points[idx])
                out[g.owners] += np.einsum("fpcj,pcjn->fn", g.weights[:, idx], jr)
        self._rows[degree] = out
        return out

    def apply(self, f) -> np.ndarray:
        """DOF values of a piecewise polynomial or of any object with ``jet``."""
        if isinstance(f, PiecewisePolynomial):
            if f.ncomp != self.ncomp:
                raise DofError(f"{f.rank} input for {self.family} degrees of freedom")
            return self.rows(f.degree) @ f.vector
        if f.ncomp != self.ncomp:
            raise DofError(f"input with {f.ncomp} components for {self.family} degrees of freedom")
        out = np.zeros(len(self))
        for g in self.groups:
            jet = f.jet(g.points, g.subs)
            out[g.owners] += np.einsum("fpcj,pcj->f", g.weights, jet)
        return out

    def labels(self) -> list[str]:
        return [f.label for f in self.functionals]

    def keys(self) -> list[tuple]:
        return [f.key for f in self.functionals]


class _Builder:
    def __init__(self, split: MacroSplit, ncomp: int, quad_degree: int):
        self.split = split
        self.ncomp = ncomp
        self.qdeg = quad_degree
        self.functionals: list[LinearFunctional] = []
        self.groups: list[_Group] = []

    def add_group(self, points, subs, weights, metas):
        start = len(self.functionals)
        self.functionals.extend(metas)
        self.groups.append(_Group(np.asarray(points, float), np.asarray(subs, int),
                                  np.asarray(weights, float), np.arange(start, start + len(metas))))

    def add_point(self, point, entries, meta):
        """``entries``: list of (sub, comp, jet index, weight) at one point."""
        subs = sorted({e[0] for e in entries})
        w = np.zeros((1, len(subs), self.ncomp, 3))
        for s, c, j, val in entries:
            w[0, subs.index(s), c, j] += val
        self.add_group(np.repeat(np.atleast_2d(point), len(subs), axis=0), subs, w, [meta])

    # geometry helpers
    def vertex_sub(self, i: int) -> int:
        return int(np.nonzero((MacroSplit.SUBS == i).any(axis=1))[0][0])

    def vid(self, i: int) -> int:
        return int(self.split.vertex_ids[i - 1])

    def eid(self, k: int) -> int:
        return int(self.split.edge_ids[k])


def _legendre01(t, k):
    return npleg.legval(2 * np.asarray(t) - 1, np.eye(k + 1)[k])


def _half_edge_moments(b: _Builder, kind: str, kmax: int, quantity: str, comps=None):
    """Moments ``int_e Q p_j`` on the six half-edges for ``j = 0..kmax``.

    ``quantity``: value (vector-valued moments per component when ``comps``
    is given), normal-derivative, div.
    """
    if kmax < 0:
        return
    sp_ = b.split
    nu = sp_.canonical_normals
    for k in range(3):
        for h, (pa, pb, sub) in enumerate(sp_.half_edges(k)):
            x, w, t = segment_rule(pa, pb, b.qdeg)
            metas, weights = [], []
            for j in range(kmax + 1):
                pw = w * _legendre01(t, j)
                for c in (comps if comps is not None else [None]):
                    wt = np.zeros((len(x), b.ncomp, 3))
                    if quantity == "value":
                        wt[:, 0 if c is None else c, 0] = pw
                    elif quantity == "normal-derivative":
                        wt[:, 0, 1] = pw * nu[k, 0]
                        wt[:, 0, 2] = pw * nu[k, 1]
                    elif quantity == "div":
                        wt[:, 0, 1] = pw
                        wt[:, 1, 2] = pw
                    else:
                        raise ValueError(quantity)
                    key = ("half-edge", b.eid(k), h, kind, j) + (() if c is None else (c,))
                    lab = f"{kind} P{j}" + ("" if c is None else f" comp {c}") + f" on half {h} of edge {k}"
                    metas.append(LinearFunctional(kind, key, ("half-edge", k, h), lab))
                    weights.append(wt)
            b.add_group(x, np.full(len(x), sub), np.array(weights), metas)


def _edge_flux(b: _Builder, k: int):
    nu = b.split.canonical_normals[k]
    pts, subs, ws = [], [], []
    for pa, pb, sub in b.split.half_edges(k):
        x, w, _ = segment_rule(pa, pb, b.qdeg)
        wt = np.zeros((len(x), b.ncomp, 3))
        wt[:, 0, 0] = w * nu[0]
        wt[:, 1, 0] = w * nu[1]
        pts.append(x)
        subs.append(np.full(len(x), sub))
        ws.append(wt)
    meta = LinearFunctional("normal-flux", ("edge", b.eid(k), "normal-flux"), ("edge", k),
                            f"flux through edge {k}")
    b.add_group(np.vstack(pts), np.concatenate(subs), np.concatenate(ws)[None], [meta])


def _interior_moments(b: _Builder, kind: str, test: FESpace, pairing: str, transform=None):
    """``int_T pairing(f, t_j)`` for the basis ``t_j`` of ``test``."""
    basis = test.basis if transform is None else test.basis @ transform
    d = basis.shape[1]
    if d == 0:
        return
    tris = b.split.tris
    pts, subs, ws = [], [], []
    for s in range(6):
        x, w, _ = triangle_rule(tris[s], b.qdeg)
        tj = np.einsum("pcjn,nd->dpcj", jet_rows(test.tris, test.degree, test.ncomp, s, x), basis)
        wt = np.zeros((d, len(x), b.ncomp, 3))
        if pairing == "value":          # int f t
            wt[:, :, :, 0] = w[None, :, None] * tj[:, :, :, 0]
        elif pairing == "rot-rot":      # int rot f . rot t = int grad f . grad t
            wt[:, :, 0, 1] = w * tj[:, :, 0, 1]
            wt[:, :, 0, 2] = w * tj[:, :, 0, 2]
        elif pairing == "rot":          # int f . rot t
            wt[:, :, 0, 0] = w * tj[:, :, 0, 2]
            wt[:, :, 1, 0] = -w * tj[:, :, 0, 1]
        elif pairing == "div":          # int (div f) t
            wt[:, :, 0, 1] = w * tj[:, :, 0, 0]
            wt[:, :, 1, 2] = w * tj[:, :, 0, 0]
        else:
            raise ValueError(pairing)
        pts.append(x)
        subs.append(np.full(len(x), s))
        ws.append(wt)
    metas = [LinearFunctional(kind, ("macro", b.split.index, kind, j), ("macro",),
                              f"{kind} against {test.name} basis {j}") for j in range(d)]
    b.add_group(np.vstack(pts), np.concatenate(subs), np.concatenate(ws, axis=1), metas)


def _interior_moments_plain(b: _Builder):
    pts, subs, ws = [], [], []
    for s in range(6):
        x, w, _ = triangle_rule(b.split.tris[s], b.qdeg)
        wt = np.zeros((len(x), 1, 3))
        wt[:, 0, 0] = w
        pts.append(x)
        subs.append(np.full(len(x), s))
        ws.append(wt)
    meta = LinearFunctional("total-integral", ("macro", b.split.index, "total-integral"), ("macro",),
                            "integral over the macro-triangle")
    b.add_group(np.vstack(pts), np.concatenate(subs), np.concatenate(ws)[None], [meta])


def _random_transform(rng, d):
    if d == 0:
        return None
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q @ np.diag(rng.uniform(0.5, 2.0, d))


def build_dofs(split: MacroSplit, family: str, r: int, rng: np.random.Generator | None = None,
               literal: bool = False, quad_degree: int | None = None) -> DofSet:
    """Degrees of freedom of ``family`` at degree ``r`` on one split.

    ``rng`` re-randomizes the interior test bases (used to check that
    projections do not depend on that choice).  ``literal`` keeps the
    over-determined lowest-order list for S1 at ``r = 1`` instead of the
    square replacement.
    """
    if family not in DOF_FAMILIES:
        raise DofError(f"no degrees of freedom for family {family!r}")
    if r < MIN_DEGREE[family]:
        raise DofError(f"degree {r} is not admissible for {family} (need r >= {MIN_DEGREE[family]})")
    ncomp = ncomp_of(family)
    qdeg = quad_degree if quad_degree is not None else max(2 * r + 2, SMOOTH_QUAD_DEGREE)
    b = _Builder(split, ncomp, qdeg)
    tests: dict = {}
    sigma = split.sigma
    tau = split.canonical_tangents
    nu = split.canonical_normals

    def interior(kind, test_family, ring, deg, pairing):
        if deg < 0:
            return
        test = build_space(split, test_family, ring, deg)
        tests[kind] = test
        tr = None if rng is None else _random_transform(rng, test.dim)
        _interior_moments(b, kind, test, pairing, tr)

    def vertex_values(comps):
        for i in (1, 2, 3):
            s = b.vertex_sub(i)
            for c in comps:
                b.add_point(split.points[i], [(s, c, 0, 1.0)],
                            LinearFunctional("point-value", ("vertex", b.vid(i), "value", c),
                                             ("vertex", i), f"value comp {c} at vertex {i}"))

    def split_jump(k, what):
        z = split.points[4 + k]
        s1, s2 = 2 * k, 2 * k + 1
        if what == "value":
            e = [(s1, 0, 0, sigma[k]), (s2, 0, 0, -sigma[k])]
        else:
            e = [(s1, 0, 1, sigma[k]), (s1, 1, 2, sigma[k]), (s2, 0, 1, -sigma[k]), (s2, 1, 2, -sigma[k])]
        kind = "jump-of-value" if what == "value" else "jump-of-divergence"
        b.add_point(z, e, LinearFunctional(kind, ("edge", b.eid(k), kind), ("split-point", k),
                                           f"{kind} at split point {k}"))

    if family == "S0":
        for i in (1, 2, 3):
            s = b.vertex_sub(i)
            z = split.points[i]
            b.add_point(z, [(s, 0, 0, 1.0)], LinearFunctional(
                "point-value", ("vertex", b.vid(i), "value"), ("vertex", i), f"value at vertex {i}"))
            for j, name in ((1, "dx"), (2, "dy")):
                b.add_point(z, [(s, 0, j, 1.0)], LinearFunctional(
                    "point-gradient", ("vertex", b.vid(i), name), ("vertex", i), f"{name} at vertex {i}"))
        if r >= 3:
            for k in range(3):
                z = split.points[4 + k]
                b.add_point(z, [(2 * k, 0, 0, 1.0)], LinearFunctional(
                    "point-value", ("edge", b.eid(k), "value"), ("split-point", k), f"value at split point {k}"))
                b.add_point(z, [(2 * k, 0, 1, tau[k, 0]), (2 * k, 0, 2, tau[k, 1])], LinearFunctional(
                    "point-tangential-derivative", ("edge", b.eid(k), "dtau"), ("split-point", k),
                    f"tangential derivative at split point {k}"))
        _half_edge_moments(b, "normal-derivative-moment", r - 3, "normal-derivative")
        _half_edge_moments(b, "value-moment", r - 4, "value")
        interior("rot-rot-moment", "S0", True, r, "rot-rot")

    elif family == "L1":
        vertex_values((0, 1))
        if r == 1:
            for k in range(3):
                _edge_flux(b, k)
        for k in range(3):
            split_jump(k, "div")
        if r >= 2:
            for k in range(3):
                b.add_point(split.points[4 + k], [(2 * k, 0, 0, nu[k, 0]), (2 * k, 1, 0, nu[k, 1])],
                            LinearFunctional("point-normal-component", ("edge", b.eid(k), "normal-value"),
                                             ("split-point", k), f"normal component at split point {k}"))
        _half_edge_moments(b, "value-moment", r - 2, "value", comps=(0, 1))
        interior("rot-moment", "S0", True, r + 1, "rot")
        interior("div-moment", "calV2", True, r - 1, "div")

    elif family == "V2":
        for k in range(3):
            split_jump(k, "value")
        _interior_moments_plain(b)
        interior("value-moment", "calV2", True, r, "value")

    elif family == "S1":
        if r == 1 and not literal:
            vertex_values((0, 1))
            for k in range(3):
                _edge_flux(b, k)
        else:
            for i in (1, 2, 3):
                s = b.vertex_sub(i)
                z = split.points[i]
                for c in (0, 1):
                    b.add_point(z, [(s, c, 0, 1.0)], LinearFunctional(
                        "point-value", ("vertex", b.vid(i), "value", c), ("vertex", i),
                        f"value comp {c} at vertex {i}"))
                b.add_point(z, [(s, 0, 1, 1.0), (s, 1, 2, 1.0)], LinearFunctional(
                    "point-divergence", ("vertex", b.vid(i), "div"), ("vertex", i), f"divergence at vertex {i}"))
            if r == 1:
                for k in range(3):
                    _edge_flux(b, k)
            if r >= 2:
                for k in range(3):
                    z = split.points[4 + k]
                    b.add_point(z, [(2 * k, 0, 0, nu[k, 0]), (2 * k, 1, 0, nu[k, 1])], LinearFunctional(
                        "point-normal-component", ("edge", b.eid(k), "normal-value"), ("split-point", k),
                        f"normal component at split point {k}"))
                    b.add_point(z, [(2 * k, 0, 1, 1.0), (2 * k, 1, 2, 1.0)], LinearFunctional(
                        "point-divergence", ("edge", b.eid(k), "div"), ("split-point", k),
                        f"divergence at split point {k}"))
            _half_edge_moments(b, "value-moment", r - 2, "value", comps=(0, 1))
            _half_edge_moments(b, "div-moment", r - 3, "div")
            interior("rot-moment", "S0", True, r + 1, "rot")
            interior("div-moment", "L2", True, r - 1, "div")

    elif family == "L2":
        if r >= 1:
            for i in (1, 2, 3):
                b.add_point(split.points[i], [(b.vertex_sub(i), 0, 0, 1.0)], LinearFunctional(
                    "point-value", ("vertex", b.vid(i), "value"), ("vertex", i), f"value at vertex {i}"))
            for k in range(3):
                b.add_point(split.points[4 + k], [(2 * k, 0, 0, 1.0)], LinearFunctional(
                    "point-value", ("edge", b.eid(k), "value"), ("split-point", k), f"value at split point {k}"))
            _half_edge_moments(b, "value-moment", r - 2, "value")
        _interior_moments_plain(b)
        if r >= 1:
            interior("value-moment", "L2", True, r, "value")

    return DofSet(family, r, split, tuple(b.functionals), tuple(b.groups), tests)


def dof_count_formula(family: str, r: int) -> int:
    """Totals annotated next to each list of degrees of freedom."""
    if family == "S0":
        return 3 * r * r - 3 * r + 3
    if family == "L1":
        return 6 * r * r + 6 * r + 2
    if family == "V2":
        return 3 * r * r + 9 * r + 6
    if family == "S1":
        return 6 * r * r + 3
    if family == "L2":
        return 3 * r * r + 3 * r + 1
    raise DofError(family)


# ---------------------------------------------------------------------------
# unisolvence and dual bases


TARGET_SPACE = {"S0": "S0", "L1": "L1", "V2": "V2", "S1": "S1", "L2": "L2"}


@dataclass(frozen=True)
class UnisolvenceReport:
    family: str
    degree: int
    size: int
    smin: float
    smax: float
    cond: float
    verdict: bool

    def to_json(self) -> dict:
        return {"family": self.family, "r": self.degree, "size": self.size, "smin": self.smin,
                "smax": self.smax, "cond": self.cond, "pass": self.verdict}


def dof_matrix(sp_: FESpace, ds: DofSet) -> np.ndarray:
    return ds.rows(sp_.degree) @ sp_.basis


def unisolvence_report(sp_: FESpace, ds: DofSet, rtol: float = 1e-9) -> UnisolvenceReport:
    if len(ds) != sp_.dim:
        raise DofError(f"{len(ds)} functionals for {sp_.name} of dimension {sp_.dim}")
    s = np.linalg.svd(dof_matrix(sp_, ds), compute_uv=False)
    smin, smax = (float(s.min()), float(s.max())) if len(s) else (1.0, 1.0)
    return UnisolvenceReport(ds.family, ds.degree, len(ds), smin, smax,
                             smax / smin if smin > 0 else np.inf, smin > rtol * smax)


@dataclass(frozen=True)
class Projector:
    """Projection onto a local space induced by its degrees of freedom."""

    space: FESpace
    dofs: DofSet
    nodal: np.ndarray = field(repr=False)   # (n_coeffs, dim): dual basis coefficients

    def coefficients(self, f) -> np.ndarray:
        return self.nodal @ self.dofs.apply(f)

    def __call__(self, f) -> PiecewisePolynomial:
        return PiecewisePolynomial.from_vector(self.space.tris, self.space.degree, self.coefficients(f),
                                               self.space.ncomp)

    def nodal_function(self, j: int) -> PiecewisePolynomial:
        return PiecewisePolynomial.from_vector(self.space.tris, self.space.degree, self.nodal[:, j],
                                               self.space.ncomp)


def dual_basis(sp_: FESpace, ds: DofSet, rtol: float = 1e-9) -> np.ndarray:
    rep = unisolvence_report(sp_, ds, rtol)
    if not rep.verdict:
        raise DofError(f"{ds.family}_{ds.degree} degrees of freedom are not unisolvent "
                       f"(smin/smax = {rep.smin / rep.smax:.2e})")
    return sp_.basis @ np.linalg.inv(dof_matrix(sp_, ds))


def make_projector(split: MacroSplit, family: str, r: int, rng=None) -> Projector:
    sp_ = build_space(split, TARGET_SPACE[family], False, r)
    ds = build_dofs(split, family, r, rng=rng)
    return Projector(sp_, ds, dual_basis(sp_, ds))


_PROJ_CACHE: dict = {}

CHAINS = {"Pi0": "S0", "Pi1": "L1", "Pi2": "V2", "varpi1": "S1", "varpi2": "L2"}


def projector(split: MacroSplit, chain: str, r: int) -> Projector:
    """Cached projector; ``chain`` is one of Pi0, Pi1, Pi2, varpi1, varpi2 and
    ``r`` the degree of its target space."""
    if chain not in CHAINS:
        raise DofError(f"unknown projection {chain!r}")
    key = (split.points.tobytes(), split.sigma.tobytes(), split.index, chain, r)
    if key not in _PROJ_CACHE:
        if len(_PROJ_CACHE) > 2048:
            _PROJ_CACHE.clear()
        _PROJ_CACHE[key] = make_projector(split, CHAINS[chain], r)
    return _PROJ_CACHE[key]


def local_project(split: MacroSplit, chain: str, r: int, f) -> PiecewisePolynomial:
    return projector(split, chain, r)(f)


# ---------------------------------------------------------------------------
# commuting diagrams

DIAGRAMS = {
    "thm1": (("rot", "Pi0", "Pi1"), ("div", "Pi1", "Pi2")),
    "thm2": (("rot", "Pi0", "varpi1"), ("div", "varpi1", "varpi2")),
}


def _relative(a: PiecewisePolynomial, b: PiecewisePolynomial) -> float:
    scale = max(np.abs(a.coeffs).max(), np.abs(b.coeffs).max(), 1e-300)
    return float(np.abs((a - b).coeffs).max() / scale)


def commute_residuals(split: MacroSplit, which: str, r: int, trials: int = 50,
                      rng: np.random.Generator | None = None, project=None) -> list[dict]:
    """Relative residuals of both squares of a commuting diagram.

    Each trial draws a random scalar and a random vector field and
    compares ``op(P_a f)`` with ``P_b(op f)``.  ``project(chain, deg, f)``
    defaults to the local projections on ``split``.
    """
    from .fields import random_wave_field
    from .poly import divergence, rot_scalar

    if which not in DIAGRAMS:
        raise DofError(f"unknown diagram {which!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    project = project or (lambda chain, deg, f: local_project(split, chain, deg, f))
    out = []
    for t in range(trials):
        row = {"trial": t, "r": r}
        for op, first, second in DIAGRAMS[which]:
            f = random_wave_field(rng, 1 if op == "rot" else 2, waves=0 if t % 2 else 2)
            deg = r if op == "rot" else r - 1
            lhs = (rot_scalar if op == "rot" else divergence)(project(first, deg, f))
            rhs = project(second, deg - 1, f.rot() if op == "rot" else f.div())
            row[f"{op}_residual"] = _relative(lhs, rhs)
        out.append(row)
    return out


def idempotence_residual(split: MacroSplit, chain: str, r: int, rng: np.random.Generator) -> float:
    """Apply a projection to a random element of its own space."""
    P = projector(split, chain, r)
    f = P.space.random_element(rng)
    return _relative(P(f), f)
