"""Piecewise polynomials in Bernstein-Bezier form on a split.

A :class:`PiecewisePolynomial` stores one coefficient block per subtriangle
and per component; no continuity is implied.  The flat coefficient vector
used by the linear-algebra layers is ``coeffs.ravel()`` with layout
``(subtriangle, component, bernstein index)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import bernstein as bb
from .mesh import MacroSplit
from .quadrature import segment_rule, triangle_rule


class TraceError(ValueError):
    pass


def n_coeffs(n_sub: int, r: int, ncomp: int = 1) -> int:
    return n_sub * ncomp * bb.dim(r)


@dataclass(frozen=True)
class PiecewisePolynomial:
    tris: np.ndarray      # (n_sub, 3, 2)
    degree: int
    coeffs: np.ndarray    # (n_sub, ncomp, dim(degree))

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        tris = np.asarray(self.tris, dtype=float)
        if c.ndim == 2:
            c = c[:, None, :]
        if c.shape[0] != tris.shape[0] or c.shape[2] != bb.dim(max(self.degree, 0)):
            raise ValueError(f"coefficient block shape {c.shape} does not match "
                             f"{tris.shape[0]} subtriangles of degree {self.degree}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "tris", tris)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_vector(cls, tris, r: int, vec: np.ndarray, ncomp: int = 1):
        tris = np.asarray(tris, dtype=float)
        return cls(tris, r, np.asarray(vec, dtype=float).reshape(len(tris), ncomp, bb.dim(r)))

    @classmethod
    def zeros(cls, tris, r: int, ncomp: int = 1):
        tris = np.asarray(tris, dtype=float)
        return cls(tris, r, np.zeros((len(tris), ncomp, bb.dim(r))))

    @classmethod
    def constant(cls, tris, value, r: int = 0):
        tris = np.asarray(tris, dtype=float)
        value = np.atleast_1d(np.asarray(value, dtype=float))
        c = np.broadcast_to(value[None, :, None], (len(tris), len(value), bb.dim(r)))
        return cls(tris, r, c.copy())

    @classmethod
    def interpolate_affine(cls, tris, fn, ncomp: int = 1):
        """Degree-1 field taking values ``fn(x)`` at subtriangle vertices."""
        tris = np.asarray(tris, dtype=float)
        c = np.zeros((len(tris), ncomp, 3))
        for s, tri in enumerate(tris):
            for v in range(3):
                c[s, :, v] = np.atleast_1d(fn(tri[v]))
        # Bernstein order for r = 1 is (1,0,0), (0,1,0), (0,0,1)
        return cls(tris, 1, c)

    @classmethod
    def fit(cls, tris, r: int, fn, ncomp: int = 1):
        """Subtriangle-wise interpolation of a closed-form function.

        Exact when ``fn`` is a polynomial of degree at most ``r``.
        """
        tris = np.asarray(tris, dtype=float)
        al = bb.multi_indices(r)
        lam = al / max(r, 1) if r > 0 else np.full((1, 3), 1 / 3)
        vand = bb.basis(r, lam)
        inv = np.linalg.inv(vand)
        c = np.zeros((len(tris), ncomp, bb.dim(r)))
        for s, tri in enumerate(tris):
            vals = np.array([np.atleast_1d(fn(x)) for x in lam @ tri]).reshape(-1, ncomp)
            c[s] = (inv @ vals).T
        return cls(tris, r, c)

    # -- basic properties ---------------------------------------------------
    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[1]

    @property
    def rank(self) -> str:
        return "scalar" if self.ncomp == 1 else "vector2"

    @property
    def n_sub(self) -> int:
        return self.coeffs.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.ravel()

    def norm(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def component(self, i: int) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.tris, self.degree, self.coeffs[:, i:i + 1, :])

    @staticmethod
    def stack(parts) -> "PiecewisePolynomial":
        r = max(p.degree for p in parts)
        parts = [p.elevate(r - p.degree) for p in parts]
        return PiecewisePolynomial(parts[0].tris, r, np.concatenate([p.coeffs for p in parts], axis=1))

    # -- arithmetic ------------------------------------------------------------
    def elevate(self, k: int = 1) -> "PiecewisePolynomial":
        if k <= 0:
            return self
        e = bb.elevation_matrix(self.degree, k)
        return PiecewisePolynomial(self.tris, self.degree + k, self.coeffs @ e.T)

    def _align(self, other):
        r = max(self.degree, other.degree)
        return self.elevate(r - self.degree), other.elevate(r - other.degree)

    def __add__(self, other):
        if isinstance(other, PiecewisePolynomial):
            a, b = self._align(other)
            return PiecewisePolynomial(a.tris, a.degree, a.coeffs + b.coeffs)
        return self + PiecewisePolynomial.constant(self.tris, np.full(self.ncomp, other), self.degree)

    def __neg__(self):
        return PiecewisePolynomial(self.tris, self.degree, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, scalar):
        return PiecewisePolynomial(self.tris, self.degree, float(scalar) * self.coeffs)

    def __mul__(self, other):
        """Product with a number or with a scalar piecewise polynomial."""
        if not isinstance(other, PiecewisePolynomial):
            return float(other) * self
        if other.ncomp == 1:
            c = bb.multiply(self.coeffs, other.coeffs[:, :1, :], self.degree, other.degree)
        elif self.ncomp == 1:
            c = bb.multiply(self.coeffs[:, :1, :], other.coeffs, self.degree, other.degree)
        else:
            raise ValueError("product of two vector fields is not defined")
        return PiecewisePolynomial(self.tris, self.degree + other.degree, c)

    def dot_constant(self, vecs: np.ndarray) -> "PiecewisePolynomial":
        """Pointwise dot product with one constant vector per subtriangle."""
        vecs = np.broadcast_to(np.asarray(vecs, dtype=float), (self.n_sub, self.ncomp))
        c = np.einsum("sc,scb->sb", vecs, self.coeffs)
        return PiecewisePolynomial(self.tris, self.degree, c[:, None, :])

    def times_constant_vector(self, vecs: np.ndarray) -> "PiecewisePolynomial":
        """Scalar field times one constant 2-vector per subtriangle."""
        vecs = np.broadcast_to(np.asarray(vecs, dtype=float), (self.n_sub, 2))
        c = self.coeffs[:, 0:1, :] * vecs[:, :, None]
        return PiecewisePolynomial(self.tris, self.degree, c)

    # -- calculus -------------------------------------------------------------
    def partial(self, axis: int) -> "PiecewisePolynomial":
        if self.degree == 0:
            return PiecewisePolynomial(self.tris, 0, np.zeros_like(self.coeffs))
        out = np.zeros((self.n_sub, self.ncomp, bb.dim(self.degree - 1)))
        for s, tri in enumerate(self.tris):
            d = bb.derivative_matrix(self.degree, bb.grad_barycentric(tri)[:, axis])
            out[s] = self.coeffs[s] @ d.T
        return PiecewisePolynomial(self.tris, self.degree - 1, out)

    def grad(self) -> "PiecewisePolynomial":
        if self.ncomp != 1:
            raise ValueError("gradient of a vector field is not supported")
        return PiecewisePolynomial.stack([self.partial(0), self.partial(1)])

    def evaluate(self, lam: np.ndarray, sub: int) -> np.ndarray:
        """Values at barycentric points of one subtriangle, shape (N, ncomp)."""
        return bb.basis(self.degree, lam) @ self.coeffs[sub].T

    def evaluate_at(self, x: np.ndarray, sub: int) -> np.ndarray:
        return self.evaluate(bb.barycentric(self.tris[sub], x), sub)

    def locate(self, x: np.ndarray, tol: float = 1e-12) -> int:
        for s, tri in enumerate(self.tris):
            if np.all(bb.barycentric(tri, x) >= -tol):
                return s
        raise ValueError(f"point {x} lies outside the domain")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.evaluate_at(x, self.locate(x))[0]

    def sup_norm_samples(self, n: int = 8) -> float:
        """Max of |values| on a barycentric lattice in every subtriangle."""
        lam = bb.multi_indices(n) / n
        vals = np.einsum("nb,scb->snc", bb.basis(self.degree, lam), self.coeffs)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    # -- serialisation ------------------------------------------------------------
    def to_json(self) -> dict:
        return {"degree": self.degree, "rank": self.rank,
                "coefficients": self.coeffs.tolist(), "triangles": self.tris.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PiecewisePolynomial":
        return cls(np.array(data["triangles"]), int(data["degree"]), np.array(data["coefficients"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def rot_scalar(q: PiecewisePolynomial) -> PiecewisePolynomial:
    """``rot q = (dq/dy, -dq/dx)``."""
    if q.ncomp != 1:
        raise ValueError("rot expects a scalar field")
    if q.degree == 0:
        return PiecewisePolynomial.zeros(q.tris, 0, 2)
    return PiecewisePolynomial.stack([q.partial(1), -q.partial(0)])


def divergence(v: PiecewisePolynomial) -> PiecewisePolynomial:
    if v.ncomp != 2:
        raise ValueError("div expects a vector field")
    if v.degree == 0:
        return PiecewisePolynomial.zeros(v.tris, 0, 1)
    return v.component(0).partial(0) + v.component(1).partial(1)


# --------------------------------------------------------------------------
# operator matrices on the flat coefficient layout
# --------------------------------------------------------------------------

def _deriv_blocks(tris, r):
    out = []
    for tri in tris:
        g = bb.grad_barycentric(tri)
        out.append((bb.derivative_matrix(r, g[:, 0]), bb.derivative_matrix(r, g[:, 1])))
    return out


def rot_matrix(tris, r: int, sparse: bool = False):
    """Scalar degree ``r`` -> vector degree ``r - 1``."""
    tris = np.asarray(tris)
    blocks = []
    for dx, dy in _deriv_blocks(tris, r):
        blocks.append(np.vstack([dy, -dx]) if r > 0 else np.zeros((2, 1)))
    m = sp.block_diag(blocks, format="csr")
    return m if sparse else m.toarray()


def div_matrix(tris, r: int, sparse: bool = False):
    """Vector degree ``r`` -> scalar degree ``r - 1``."""
    tris = np.asarray(tris)
    blocks = []
    for dx, dy in _deriv_blocks(tris, r):
        blocks.append(np.hstack([dx, dy]) if r > 0 else np.zeros((1, 2)))
    m = sp.block_diag(blocks, format="csr")
    return m if sparse else m.toarray()


def grad_matrix(tris, r: int, sparse: bool = False):
    """Scalar degree ``r`` -> vector degree ``r - 1``."""
    tris = np.asarray(tris)
    blocks = [np.vstack([dx, dy]) if r > 0 else np.zeros((2, 1)) for dx, dy in _deriv_blocks(tris, r)]
    m = sp.block_diag(blocks, format="csr")
    return m if sparse else m.toarray()


def jet_rows(tris, r: int, ncomp: int, sub: int, x: np.ndarray) -> np.ndarray:
    """Rows giving value and gradient of every component at points ``x``.

    Returns shape (N, ncomp, 3, n_coeffs) with jet index (value, d/dx, d/dy);
    the point set is taken to lie in subtriangle ``sub``.
    """
    tris = np.asarray(tris)
    x = np.atleast_2d(x)
    tri = tris[sub]
    lam = bb.barycentric(tri, x)
    b = bb.basis(r, lam)
    db = bb.basis_grad(r, lam, bb.grad_barycentric(tri))
    nb = bb.dim(r)
    n = n_coeffs(len(tris), r, ncomp)
    out = np.zeros((len(x), ncomp, 3, n))
    for c in range(ncomp):
        off = (sub * ncomp + c) * nb
        out[:, c, 0, off:off + nb] = b
        out[:, c, 1, off:off + nb] = db[:, :, 0]
        out[:, c, 2, off:off + nb] = db[:, :, 1]
    return out


def mass_matrix(tris, r: int, ncomp: int = 1, sparse: bool = True):
    blocks = []
    for tri in np.asarray(tris):
        _, w, lam = triangle_rule(tri, 2 * r)
        b = bb.basis(r, lam)
        m = (b * w[:, None]).T @ b
        blocks += [m] * ncomp
    m = sp.block_diag(blocks, format="csr")
    return m if sparse else m.toarray()


def stiffness_matrix(tris, r: int, ncomp: int = 1, sparse: bool = True):
    """Gradient inner product, component-wise for vector fields."""
    blocks = []
    for tri in np.asarray(tris):
        _, w, lam = triangle_rule(tri, max(2 * r - 2, 0))
        db = bb.basis_grad(r, lam, bb.grad_barycentric(tri))
        k = np.einsum("q,qid,qjd->ij", w, db, db)
        blocks += [k] * ncomp
    m = sp.block_diag(blocks, format="csr")
    return m if sparse else m.toarray()


# --------------------------------------------------------------------------
# bubble and factoring
# --------------------------------------------------------------------------

def mu_field(split: MacroSplit) -> PiecewisePolynomial:
    """Piecewise linear bubble: 1 at the interior point, 0 on the boundary."""
    c = np.zeros((6, 1, 3))
    c[:, 0, 0] = 1.0
    return PiecewisePolynomial(split.tris, 1, c)


def mu_power(tris, s: int) -> PiecewisePolynomial:
    """``mu**s`` on any collection of subtriangles listing the interior point first."""
    tris = np.asarray(tris)
    c = np.zeros((len(tris), 1, bb.dim(s)))
    c[:, 0, 0] = 1.0
    return PiecewisePolynomial(tris, s, c)


def factor_out_mu(q: PiecewisePolynomial, rtol: float = 1e-10) -> PiecewisePolynomial:
    """Return ``p`` of one degree lower with ``q = mu * p``.

    Requires the trace of ``q`` on the macro boundary (the edge of each
    subtriangle opposite the interior point) to vanish.
    """
    r = q.degree
    al = bb.multi_indices(r)
    scale = max(q.norm(), 1e-300)
    on_boundary = al[:, 0] == 0
    if np.max(np.abs(q.coeffs[:, :, on_boundary]), initial=0.0) > rtol * scale:
        raise TraceError("cannot factor mu: boundary trace does not vanish")
    if r == 0:
        return PiecewisePolynomial.zeros(q.tris, 0, q.ncomp)
    idx = bb.index_of(r)
    lo = bb.multi_indices(r - 1)
    sel = [idx[(b0 + 1, b1, b2)] for b0, b1, b2 in lo]
    factor = r / (lo[:, 0] + 1.0)
    return PiecewisePolynomial(q.tris, r - 1, q.coeffs[:, :, sel] * factor)


# --------------------------------------------------------------------------
# integration, traces, jumps
# --------------------------------------------------------------------------

def integrate(f: PiecewisePolynomial, region="macro", g: PiecewisePolynomial | None = None,
              degree: int | None = None) -> np.ndarray:
    """Integral of ``f`` (or of the component-wise product ``f * g``).

    ``region`` is ``"macro"`` (all subtriangles), ``("sub", k)``, or
    ``("edge", start, end, k)`` for the segment ``[start, end]`` lying on
    subtriangle ``k``.
    """
    deg = f.degree + (g.degree if g is not None else 0)
    deg = deg if degree is None else degree
    if region == "macro":
        subs = range(f.n_sub)
    elif region[0] == "sub":
        subs = [region[1]]
    elif region[0] == "edge":
        _, a, b, k = region
        x, w, _ = segment_rule(a, b, deg)
        vals = f.evaluate_at(x, k)
        if g is not None:
            vals = vals * g.evaluate_at(x, k)
        return w @ vals
    else:
        raise ValueError(f"unknown region {region!r}")
    total = np.zeros(f.ncomp if g is None or g.ncomp == 1 else g.ncomp)
    for s in subs:
        x, w, lam = triangle_rule(f.tris[s], deg)
        vals = f.evaluate(lam, s)
        if g is not None:
            vals = vals * g.evaluate(lam, s)
        total = total + w @ vals
    return total


@dataclass(frozen=True)
class EdgePolynomial:
    """Trace on a split macro edge: two degree-``r`` pieces in arc length."""

    lengths: tuple[float, float]
    degree: int
    pieces: np.ndarray   # (2, r + 1) 1D Bernstein coefficients

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        l0, l1 = self.lengths
        out = np.empty_like(s)
        left = s <= l0
        out[left] = bb.basis_1d(self.degree, s[left] / l0) @ self.pieces[0]
        out[~left] = bb.basis_1d(self.degree, (s[~left] - l0) / l1) @ self.pieces[1]
        return out

    def jump_at_split(self) -> float:
        return float(self.pieces[1][0] - self.pieces[0][-1])

    def norm(self) -> float:
        return float(np.max(np.abs(self.pieces)))


def _subtriangle_edge_coeffs(c: np.ndarray, r: int) -> np.ndarray:
    """Coefficients of the edge opposite the first vertex, from vertex 1 to 2."""
    idx = bb.index_of(r)
    return np.array([c[idx[(0, r - j, j)]] for j in range(r + 1)])


def edge_trace(f: PiecewisePolynomial, split: MacroSplit, k: int, which: str = "value",
               component: int = 0) -> EdgePolynomial:
    """Trace of a quantity of ``f`` on macro edge ``k`` (canonical direction)."""
    n, t = split.normals[k], split.tangents[k]
    if which == "value":
        g = f.component(component)
    elif which == "normal-component":
        g = f.dot_constant(n)
    elif which == "tangential-component":
        g = f.dot_constant(t)
    elif which == "normal-derivative":
        g = f.grad().dot_constant(n)
    elif which == "tangential-derivative":
        g = f.grad().dot_constant(t)
    elif which == "divergence":
        g = divergence(f)
    else:
        raise ValueError(f"unknown trace quantity {which!r}")
    pieces, lengths = [], []
    for start, end, sub in split.half_edges(k):
        coeffs = _subtriangle_edge_coeffs(g.coeffs[sub, 0], g.degree)
        tri = g.tris[sub]
        if np.linalg.norm(tri[1] - start) > np.linalg.norm(tri[2] - start):
            coeffs = coeffs[::-1]
        pieces.append(coeffs)
        lengths.append(float(np.linalg.norm(end - start)))
    return EdgePolynomial(tuple(lengths), g.degree, np.array(pieces))


def jump(p: PiecewisePolynomial, split: MacroSplit, k: int, component: int = 0):
    """Jump of ``p`` at the split point of edge ``k``.

    Returns ``(p1 - p2, m1)`` with ``K1`` the lower-indexed subtriangle of the
    fan and ``m1`` its outward normal across the interior edge, so the
    vector jump is ``(p1 - p2) * m1``.
    """
    z = split.points[4 + k]
    v1 = p.evaluate_at(z, 2 * k)[0, component]
    v2 = p.evaluate_at(z, 2 * k + 1)[0, component]
    d = split.points[0] - z
    m1 = np.array([d[1], -d[0]]) / np.linalg.norm(d)
    a, _ = split.edge_endpoints(k)
    if m1 @ (split.points[a] - z) > 0:
        m1 = -m1
    return v1 - v2, m1
