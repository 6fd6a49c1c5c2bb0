"""Local finite element spaces on one Powell-Sabin split.

Every space is the kernel of a stack of linear constraints on the
Bernstein coefficients of the unconstrained piecewise polynomial space.
Polynomial identities along edges are imposed by sampling at ``r + 1``
Chebyshev points, which is enough to force equality of degree ``r``
polynomials.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import bernstein as bb
from .linalg import nullspace
from .mesh import MacroSplit
from .poly import PiecewisePolynomial, jet_rows, n_coeffs

log = logging.getLogger(__name__)

FAMILIES = ("V0", "V1", "V2", "L0", "L1", "L2", "S0", "S1", "S2", "calV2")
VECTOR_FAMILIES = {"V1", "L1", "S1"}


class MembershipError(ValueError):
    pass


def ncomp_of(family: str) -> int:
    return 2 if family in VECTOR_FAMILIES else 1


def chebyshev01(n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 - 0.5 * np.cos((2 * k + 1) * np.pi / (2 * n))


def interior_edges(split: MacroSplit) -> list[tuple[int, int, np.ndarray, np.ndarray]]:
    """Edges through ``z0`` as ``(sub1, sub2, z0, far_end)``."""
    subs = split.SUBS
    out = []
    for far in range(1, 7):
        owners = [s for s in range(6) if far in subs[s]]
        out.append((owners[0], owners[1], split.points[0], split.points[far]))
    return out


def boundary_edges(split: MacroSplit) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Boundary sub-edges as ``(sub, start, end, outward normal)``."""
    out = []
    for s in range(6):
        _, a, b = split.SUBS[s]
        out.append((s, split.points[a], split.points[b], split.normals[s // 2]))
    return out


def _quantity(J: np.ndarray, what: str, normal=None) -> np.ndarray:
    """Rows of a first-order quantity from jet rows ``J`` of shape (ncomp, 3, n)."""
    if what == "value":
        return J[:, 0]
    if what == "normal":
        return (normal[0] * J[0, 0] + normal[1] * J[1, 0])[None]
    if what == "rot":
        return np.stack([J[0, 2], -J[0, 1]])
    if what == "div":
        return (J[0, 1] + J[1, 2])[None]
    raise ValueError(what)


def _continuity_rows(split, r, ncomp, what, npts):
    rows = []
    t = chebyshev01(npts)
    tris = split.tris
    for s1, s2, a, b in interior_edges(split):
        x = a[None] + t[:, None] * (b - a)[None]
        normal = np.array([b[1] - a[1], a[0] - b[0]]) / np.linalg.norm(b - a)
        J1 = jet_rows(tris, r, ncomp, s1, x)
        J2 = jet_rows(tris, r, ncomp, s2, x)
        for p in range(len(x)):
            rows.append(_quantity(J1[p], what, normal) - _quantity(J2[p], what, normal))
    return np.vstack(rows) if rows else np.zeros((0, n_coeffs(6, r, ncomp)))


def _boundary_rows(split, r, ncomp, what, npts):
    rows = []
    t = chebyshev01(npts)
    for s, a, b, normal in boundary_edges(split):
        x = a[None] + t[:, None] * (b - a)[None]
        J = jet_rows(split.tris, r, ncomp, s, x)
        for p in range(len(x)):
            rows.append(_quantity(J[p], what, normal))
    return np.vstack(rows)


def _mean_row(split, r, ncomp=1):
    nb = bb.dim(r)
    row = np.zeros(n_coeffs(6, r, ncomp))
    for s, tri in enumerate(split.tris):
        row[s * nb:(s + 1) * nb] = abs(bb.signed_area(tri)) / nb
    return row[None]


def _split_point_rows(split, r):
    rows = []
    for k in range(3):
        z = split.points[4 + k]
        rows.append(jet_rows(split.tris, r, 1, 2 * k, z)[0, 0, 0]
                    - jet_rows(split.tris, r, 1, 2 * k + 1, z)[0, 0, 0])
    return np.vstack(rows)


def constraint_matrix(split: MacroSplit, family: str, ring: bool, r: int) -> np.ndarray:
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if r < 0:
        raise ValueError("degree must be non-negative")
    ncomp = ncomp_of(family)
    npts = r + 1
    blocks = []
    if family in ("V0", "L0", "L1", "L2", "S0", "S1", "S2"):
        blocks.append(_continuity_rows(split, r, ncomp, "value", npts))
    if family == "V1":
        blocks.append(_continuity_rows(split, r, ncomp, "normal", npts))
    if family == "S0":
        blocks.append(_continuity_rows(split, r, ncomp, "rot", npts))
    if family == "S1":
        blocks.append(_continuity_rows(split, r, ncomp, "div", npts))
    if family == "calV2":
        blocks.append(_split_point_rows(split, r))
    if ring:
        if family in ("V0", "L0", "L1", "L2", "S0", "S1", "S2"):
            blocks.append(_boundary_rows(split, r, ncomp, "value", npts))
        if family == "V1":
            blocks.append(_boundary_rows(split, r, ncomp, "normal", npts))
        if family == "S0":
            blocks.append(_boundary_rows(split, r, ncomp, "rot", npts))
        if family == "S1":
            blocks.append(_boundary_rows(split, r, ncomp, "div", npts))
        if family in ("V2", "calV2", "L2", "S2"):
            blocks.append(_mean_row(split, r))
    n = n_coeffs(6, r, ncomp)
    return np.vstack(blocks) if blocks else np.zeros((0, n))


@dataclass(frozen=True)
class FESpace:
    family: str
    ring: bool
    degree: int
    split: MacroSplit
    basis: np.ndarray = field(repr=False)   # (n_coeffs, dim), orthonormal columns
    constraints: np.ndarray = field(repr=False)

    @property
    def ncomp(self) -> int:
        return ncomp_of(self.family)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def name(self) -> str:
        return ("ring " if self.ring else "") + f"{self.family}_{self.degree}"

    @property
    def tris(self) -> np.ndarray:
        return self.split.tris

    def element(self, coords: np.ndarray) -> PiecewisePolynomial:
        return PiecewisePolynomial.from_vector(self.tris, self.degree, self.basis @ coords, self.ncomp)

    def basis_function(self, j: int) -> PiecewisePolynomial:
        return self.element(np.eye(self.dim)[j])

    def random_element(self, rng) -> PiecewisePolynomial:
        return self.element(rng.standard_normal(self.dim))


_CACHE: dict = {}


def _key(split: MacroSplit, family, ring, r):
    return (split.points.tobytes(), split.sigma.tobytes(), family, bool(ring), int(r))


def build_space(split: MacroSplit, family: str, ring: bool, r: int) -> FESpace:
    key = _key(split, family, ring, r)
    if key in _CACHE:
        return _CACHE[key]
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if r < 0:
        raise ValueError(f"degree {r} is negative")
    c = constraint_matrix(split, family, ring, r)
    name = ("ring " if ring else "") + f"{family}_{r}"
    basis = nullspace(c, n=n_coeffs(6, r, ncomp_of(family)), what=name)
    log.info("built %s: dim %d", name, basis.shape[1])
    sp = FESpace(family, bool(ring), r, split, basis, c)
    if len(_CACHE) > 4096:
        _CACHE.clear()
    _CACHE[key] = sp
    return sp


# minimal degree from which each closed form holds
_FORMULA_MIN = {("S0", False): 1, ("S1", False): 1, ("S0", True): 2, ("S1", True): 1}


def dimension_formula(family: str, ring: bool, r: int) -> int | None:
    if r < 0:
        return None
    if r < _FORMULA_MIN.get((family, ring), 0):
        return None
    if not ring:
        if family in ("L0", "L1", "L2"):
            return comb(2, int(family[1])) * (3 * r * r + 3 * r + 1)
        if family == "V0":
            return 3 * r * r + 3 * r + 1
        if family == "V1":
            return 6 * r * r + 12 * r + 6
        if family == "V2":
            return 3 * r * r + 9 * r + 6
        if family == "S0":
            return 3 * r * r - 3 * r + 3
        if family == "S1":
            return 6 * r * r + 3
        if family == "S2":
            return 3 * r * r + 3 * r + 1
        if family == "calV2":
            return 3 * (r + 1) * (r + 2) - 3
        return None
    if family == "S0":
        return 3 * (r - 2) * (r - 3)
    if family == "S1":
        return 6 * (r - 1) * (r - 2)
    if family in ("S2", "L2"):
        return 3 * r * (r - 1)
    if family == "calV2":
        return 3 * (r + 1) * (r + 2) - 4
    return None


@dataclass(frozen=True)
class Membership:
    member: bool
    coords: np.ndarray
    residual: float


def check_membership(f: PiecewisePolynomial, sp: FESpace, rtol: float = 1e-9) -> Membership:
    if f.ncomp != sp.ncomp:
        raise ValueError(f"{f.rank} field cannot belong to {sp.name}")
    if f.degree > sp.degree:
        raise ValueError(f"degree {f.degree} field cannot belong to {sp.name}")
    f = f.elevate(sp.degree - f.degree)
    vec = f.vector
    if vec.shape[0] != sp.basis.shape[0]:
        raise ValueError("shape mismatch between field and space")
    coords = sp.basis.T @ vec
    res = float(np.linalg.norm(vec - sp.basis @ coords))
    scale = float(np.linalg.norm(vec))
    return Membership(res <= rtol * max(scale, 1e-300) or scale == 0.0, coords, res)


def dimension_table(split: MacroSplit, r_max: int = 6) -> list[dict]:
    rows = []
    for ring in (False, True):
        for family in FAMILIES:
            for r in range(r_max + 1):
                formula = dimension_formula(family, ring, r)
                computed = build_space(split, family, ring, r).dim
                rows.append({"family": family, "ring": ring, "r": r, "formula": formula,
                             "computed": computed,
                             "match": None if formula is None else formula == computed})
    return rows
