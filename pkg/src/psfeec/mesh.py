"""Coarse triangulations and their Powell-Sabin refinements.

Local numbering on a macro-triangle follows the usual convention: the
interior point is ``z0``, the vertices ``z1, z2, z3`` are counter-clockwise,
edge ``k`` (0-based) joins ``z[(k+1)%3 + 1]`` to ``z[(k+2)%3 + 1]`` and
carries the split point ``z[4 + k]``.  The two subtriangles of the fan at
edge ``k`` are ``2k = (z0, a, m)`` and ``2k + 1 = (z0, m, b)`` with
``a -> m -> b`` the counter-clockwise traversal of the edge.  Every
subtriangle lists ``z0`` first, so the bubble ``mu`` is its first
barycentric coordinate.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .bernstein import signed_area
from . import config


class MeshError(ValueError):
    pass


class SplitError(ValueError):
    """The Powell-Sabin refinement is not well defined."""


# --------------------------------------------------------------------------
# macro mesh
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MacroMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(init=False)
    triangle_edges: np.ndarray = field(init=False)
    edge_triangles: tuple = field(init=False)
    boundary_edges: np.ndarray = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        tris = np.asarray(self.triangles, dtype=int).reshape(-1, 3).copy()
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError("triangle references a missing vertex")
        for t in range(len(tris)):
            a = signed_area(verts[tris[t]])
            if a < 0:
                tris[t, [1, 2]] = tris[t, [2, 1]]
                a = -a
            if a <= 0:
                raise MeshError(f"triangle {t} is degenerate")
        edge_id: dict[tuple[int, int], int] = {}
        tri_edges = np.zeros_like(tris)
        incident: list[list[int]] = []
        for t, tri in enumerate(tris):
            for k in range(3):
                u, v = sorted((int(tri[(k + 1) % 3]), int(tri[(k + 2) % 3])))
                if (u, v) not in edge_id:
                    edge_id[(u, v)] = len(edge_id)
                    incident.append([])
                e = edge_id[(u, v)]
                incident[e].append(t)
                tri_edges[t, k] = e
        for e, ts in enumerate(incident):
            if len(ts) > 2:
                raise MeshError(f"edge {e} is shared by {len(ts)} triangles")
        edges = np.array(sorted(edge_id, key=edge_id.get), dtype=int).reshape(-1, 2)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "triangle_edges", tri_edges)
        object.__setattr__(self, "edge_triangles", tuple(tuple(ts) for ts in incident))
        object.__setattr__(self, "boundary_edges",
                           np.array([len(ts) == 1 for ts in incident], dtype=bool))

    @property
    def nv(self) -> int:
        return len(self.vertices)

    @property
    def ne(self) -> int:
        return len(self.edges)

    @property
    def nt(self) -> int:
        return len(self.triangles)

    @property
    def euler(self) -> int:
        return self.nv - self.ne + self.nt

    def boundary_vertices(self) -> np.ndarray:
        flags = np.zeros(self.nv, dtype=bool)
        flags[self.edges[self.boundary_edges].ravel()] = True
        return flags


def _data_lines(stream: TextIO):
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _floats(tokens, lineno, n):
    try:
        vals = [float(t) for t in tokens[:n]]
    except ValueError as exc:
        raise MeshError(f"line {lineno}: {exc}") from None
    if len(vals) < n:
        raise MeshError(f"line {lineno}: expected {n} numbers")
    return vals


def _ints(tokens, lineno, n):
    try:
        vals = [int(t) for t in tokens[:n]]
    except ValueError as exc:
        raise MeshError(f"line {lineno}: {exc}") from None
    if len(vals) < n:
        raise MeshError(f"line {lineno}: expected {n} integers")
    return vals


def _check_duplicates(verts: np.ndarray):
    _, inv, counts = np.unique(verts, axis=0, return_inverse=True, return_counts=True)
    if np.any(counts > 1):
        dup = np.nonzero(counts[np.ravel(inv)] > 1)[0]
        raise MeshError(f"duplicate vertices {dup.tolist()}")


def _load_single_block(stream: TextIO) -> MacroMesh:
    lines = _data_lines(stream)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise MeshError("line 1: empty mesh file") from None
    nv, nt = _ints(head, lineno, 2)
    verts, tris = [], []
    for lineno, tok in lines:
        if len(verts) < nv:
            verts.append(_floats(tok, lineno, 2))
        elif len(tris) < nt:
            tris.append(_ints(tok, lineno, 3))
        else:
            raise MeshError(f"line {lineno}: trailing data")
    if len(verts) != nv or len(tris) != nt:
        raise MeshError(f"expected {nv} vertices and {nt} triangles")
    verts = np.array(verts).reshape(-1, 2)
    _check_duplicates(verts)
    return MacroMesh(verts, np.array(tris, dtype=int).reshape(-1, 3))


def _load_node_ele(node: TextIO, ele: TextIO) -> MacroMesh:
    lines = _data_lines(node)
    lineno, head = next(lines)
    nv = _ints(head, lineno, 1)[0]
    ids, verts = [], []
    for lineno, tok in lines:
        ids.append(_ints(tok, lineno, 1)[0])
        verts.append(_floats(tok[1:], lineno, 2))
    if len(verts) != nv:
        raise MeshError(f"node file: expected {nv} vertices, found {len(verts)}")
    base = min(ids) if ids else 0
    lines = _data_lines(ele)
    lineno, head = next(lines)
    nt = _ints(head, lineno, 1)[0]
    tris = []
    for lineno, tok in lines:
        tri = _ints(tok[1:], lineno, 3)
        tris.append([t - base for t in tri])
    if len(tris) != nt:
        raise MeshError(f"ele file: expected {nt} triangles, found {len(tris)}")
    order = np.argsort(ids)
    verts = np.array(verts)[order]
    _check_duplicates(verts)
    return MacroMesh(verts, np.array(tris, dtype=int))


def load_macro_mesh(source, format: str = "single-block") -> MacroMesh:
    """Read a coarse mesh.

    ``source`` is a text stream or a path.  For ``node-ele`` it may be a
    ``(node_stream, ele_stream)`` pair or a path to either file.
    """
    if format == "single-block":
        if isinstance(source, (str, os.PathLike)):
            with open(source) as fh:
                return _load_single_block(fh)
        return _load_single_block(source)
    if format == "node-ele":
        if isinstance(source, tuple):
            return _load_node_ele(*source)
        stem = os.path.splitext(os.fspath(source))[0]
        with open(stem + ".node") as fn, open(stem + ".ele") as fe:
            return _load_node_ele(fn, fe)
    raise MeshError(f"unknown mesh format {format!r}")


def dumps_macro_mesh(mesh: MacroMesh) -> str:
    out = io.StringIO()
    out.write(f"{mesh.nv} {mesh.nt}\n")
    for x, y in mesh.vertices:
        out.write(f"{float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        out.write(f"{i} {j} {k}\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# simple mesh builders
# --------------------------------------------------------------------------

def unit_square_mesh(n: int = 1) -> MacroMesh:
    """``n x n`` squares, each cut along its lower-left to upper-right diagonal."""
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([(x, y) for y in xs for x in xs])
    tris = []
    for j in range(n):
        for i in range(n):
            v0 = j * (n + 1) + i
            v1, v2, v3 = v0 + 1, v0 + n + 2, v0 + n + 1
            tris += [(v0, v1, v2), (v0, v2, v3)]
    return MacroMesh(verts, np.array(tris))


def refine_uniform(mesh: MacroMesh) -> MacroMesh:
    """Split every triangle into four through its edge midpoints."""
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])
    nv = mesh.nv
    tris = []
    for t, (a, b, c) in enumerate(mesh.triangles):
        ea, eb, ec = nv + mesh.triangle_edges[t]  # opposite a, b, c
        tris += [(a, ec, eb), (ec, b, ea), (eb, ea, c), (ea, eb, ec)]
    return MacroMesh(verts, np.array(tris))


def perturbed_square_mesh(n: int, amplitude: float = 0.2, seed: int = 0) -> MacroMesh:
    """Structured square mesh with randomly moved interior vertices."""
    rng = np.random.default_rng(seed)
    base = unit_square_mesh(n)
    verts = base.vertices.copy()
    interior = ~base.boundary_vertices()
    verts[interior] += amplitude / n * rng.uniform(-1, 1, size=(interior.sum(), 2))
    return MacroMesh(verts, base.triangles)


def hexagon_mesh() -> MacroMesh:
    """Six triangles around an off-centre interior vertex."""
    ang = np.linspace(0, 2 * np.pi, 7)[:-1] + 0.1
    rad = np.array([1.0, 0.9, 1.1, 0.95, 1.05, 0.85])
    ring = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    verts = np.vstack([[0.08, -0.05], ring])
    tris = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return MacroMesh(verts, np.array(tris))


def annulus_mesh() -> MacroMesh:
    """Square ring around a square hole (first Betti number 1)."""
    outer = [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (3, 2), (3, 3), (2, 3), (1, 3),
             (0, 3), (0, 2), (0, 1)]
    inner = [(1, 1), (2, 1), (2, 2), (1, 2)]
    verts = np.array(outer + inner, dtype=float)
    o = {p: i for i, p in enumerate(outer)}
    q = {p: 12 + i for i, p in enumerate(inner)}
    idx = {**o, **q}
    tris = []
    for j in range(3):
        for i in range(3):
            if (i, j) == (1, 1):
                continue
            v0, v1, v2, v3 = idx[(i, j)], idx[(i + 1, j)], idx[(i + 1, j + 1)], idx[(i, j + 1)]
            tris += [(v0, v1, v2), (v0, v2, v3)]
    return MacroMesh(verts, np.array(tris))


# --------------------------------------------------------------------------
# Powell-Sabin refinement
# --------------------------------------------------------------------------

def incenter(p1, p2, p3) -> np.ndarray:
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    a = np.linalg.norm(p2 - p3)
    b = np.linalg.norm(p3 - p1)
    c = np.linalg.norm(p1 - p2)
    area = abs(signed_area(np.array([p1, p2, p3])))
    if area <= config.TOL.geometry * max(a, b, c) ** 2:
        raise MeshError("degenerate triangle has no incenter")
    return (a * p1 + b * p2 + c * p3) / (a + b + c)


def barycenter(p1, p2, p3) -> np.ndarray:
    return (np.asarray(p1, float) + np.asarray(p2, float) + np.asarray(p3, float)) / 3.0


INTERIOR_RULES = {"incenter": incenter, "barycenter": barycenter}


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


@dataclass(frozen=True)
class MacroSplit:
    """Geometry of the split of one macro-triangle."""

    points: np.ndarray            # (7, 2): z0 .. z6
    normals: np.ndarray           # (3, 2) outward unit normals n_k
    tangents: np.ndarray          # (3, 2) counter-clockwise unit tangents t_k
    sigma: np.ndarray             # (3,) +1 where t_k agrees with the canonical edge direction
    index: int = 0
    vertex_ids: tuple = (0, 1, 2)
    edge_ids: tuple = (0, 1, 2)

    SUBS = np.array([[0, 1 + (k + 1) % 3 if h == 0 else 4 + k,
                      4 + k if h == 0 else 1 + (k + 2) % 3]
                     for k in range(3) for h in range(2)])

    @property
    def tris(self) -> np.ndarray:
        return self.points[self.SUBS]

    @property
    def canonical_tangents(self) -> np.ndarray:
        return self.sigma[:, None] * self.tangents

    @property
    def canonical_normals(self) -> np.ndarray:
        return self.sigma[:, None] * self.normals

    @property
    def area(self) -> float:
        return signed_area(self.points[1:4])

    def edge_endpoints(self, k: int) -> tuple[int, int]:
        """Local point ids of edge ``k`` in counter-clockwise order."""
        return 1 + (k + 1) % 3, 1 + (k + 2) % 3

    def half_edges(self, k: int) -> list[tuple[np.ndarray, np.ndarray, int]]:
        """The two halves of edge ``k`` in canonical direction.

        Each entry is ``(start, end, subtriangle)``.
        """
        a, b = self.edge_endpoints(k)
        pa, pm, pb = self.points[a], self.points[4 + k], self.points[b]
        halves = [(pa, pm, 2 * k), (pm, pb, 2 * k + 1)]
        if self.sigma[k] < 0:
            halves = [(pb, pm, 2 * k + 1), (pm, pa, 2 * k)]
        return halves

    def grad_mu(self) -> np.ndarray:
        """Gradient of the bubble on each fan, shape (3, 2)."""
        out = np.zeros((3, 2))
        for k in range(3):
            a, _ = self.edge_endpoints(k)
            dist = np.dot(self.points[0] - self.points[a], -self.normals[k])
            out[k] = -self.normals[k] / dist
        return out

    def interior_tangents(self) -> np.ndarray:
        """Unit vectors along ``[z_{3+i}, z0]``, pointing at ``z0``."""
        d = self.points[0] - self.points[4:7]
        return d / np.linalg.norm(d, axis=1)[:, None]

    @classmethod
    def from_triangle(cls, p1, p2, p3, rule: str = "incenter", sigma=(1, 1, 1),
                      split_points=None) -> "MacroSplit":
        verts = np.array([p1, p2, p3], dtype=float)
        if signed_area(verts) <= 0:
            raise MeshError("macro-triangle must be counter-clockwise and non-degenerate")
        z0 = INTERIOR_RULES[rule](*verts)
        pts = np.zeros((7, 2))
        pts[0] = z0
        pts[1:4] = verts
        t = np.zeros((3, 2))
        for k in range(3):
            a, b = verts[(k + 1) % 3], verts[(k + 2) % 3]
            pts[4 + k] = 0.5 * (a + b) if split_points is None else split_points[k]
            t[k] = (b - a) / np.linalg.norm(b - a)
        n = np.column_stack([t[:, 1], -t[:, 0]])
        return cls(pts, n, t, np.asarray(sigma, dtype=float))


def reference_split(rule: str = "incenter") -> MacroSplit:
    return MacroSplit.from_triangle((0, 0), (1, 0), (0, 1), rule)


@dataclass(frozen=True)
class SplitComplex:
    """Powell-Sabin refinement of a :class:`MacroMesh`.

    Global point numbering: mesh vertices, then one split point per macro
    edge, then one interior point per macro-triangle.
    """

    mesh: MacroMesh
    points: np.ndarray
    rule: str
    macro_points: np.ndarray      # (T, 7) global ids of z0 .. z6
    subtriangles: np.ndarray      # (6T, 3) global point ids

    @property
    def n_sub(self) -> int:
        return len(self.subtriangles)

    def split_point(self, e: int) -> int:
        return self.mesh.nv + e

    def interior_point(self, t: int) -> int:
        return self.mesh.nv + self.mesh.ne + t

    @property
    def tris(self) -> np.ndarray:
        return self.points[self.subtriangles]

    def canonical_tangent(self, e: int) -> np.ndarray:
        u, v = self.mesh.edges[e]
        d = self.mesh.vertices[v] - self.mesh.vertices[u]
        return d / np.linalg.norm(d)

    def local(self, m: int) -> MacroSplit:
        mesh = self.mesh
        tri = mesh.triangles[m]
        t = np.zeros((3, 2))
        sigma = np.zeros(3)
        for k in range(3):
            a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
            d = mesh.vertices[b] - mesh.vertices[a]
            t[k] = d / np.linalg.norm(d)
            sigma[k] = 1.0 if a < b else -1.0
        n = np.column_stack([t[:, 1], -t[:, 0]])
        return MacroSplit(self.points[self.macro_points[m]], n, t, sigma, index=m,
                          vertex_ids=tuple(int(v) for v in tri),
                          edge_ids=tuple(int(e) for e in mesh.triangle_edges[m]))

    def boundary_split_points(self) -> np.ndarray:
        return self.mesh.nv + np.nonzero(self.mesh.boundary_edges)[0]

    def half_edges(self) -> list[tuple[int, int]]:
        """All split boundary edges as global point-id pairs."""
        out = []
        for e, (u, v) in enumerate(self.mesh.edges):
            m = self.split_point(e)
            out += [(int(u), m), (m, int(v))]
        return out

    def to_json(self) -> dict:
        fans = singular_fans(self)
        return {
            "rule": self.rule,
            "vertices": self.points.tolist(),
            "subtriangles": self.subtriangles.tolist(),
            "macro_points": self.macro_points.tolist(),
            "singular_points": [
                {"point": int(z), "interior": len(ks) == 4, "fan": [int(k) for k in ks]}
                for z, ks in sorted(fans.items())
            ],
            "boundary_split_edges": [list(p) for p in self.half_edges()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def powell_sabin_refine(mesh: MacroMesh, interior_rule: str = "incenter",
                        boundary_edge_rule: str = "midpoint") -> SplitComplex:
    if interior_rule not in INTERIOR_RULES:
        raise ValueError(f"unknown interior rule {interior_rule!r}")
    if boundary_edge_rule != "midpoint":
        raise ValueError(f"unknown boundary edge rule {boundary_edge_rule!r}")
    tol = config.TOL.geometry
    V, E, T = mesh.nv, mesh.ne, mesh.nt
    centers = np.array([INTERIOR_RULES[interior_rule](*mesh.vertices[tri])
                        for tri in mesh.triangles]).reshape(-1, 2)
    splits = np.zeros((E, 2))
    for e, (u, v) in enumerate(mesh.edges):
        a, b = mesh.vertices[u], mesh.vertices[v]
        ts = mesh.edge_triangles[e]
        if len(ts) == 1:
            splits[e] = 0.5 * (a + b)
            continue
        c1, c2 = centers[ts[0]], centers[ts[1]]
        # c1 + s (c2 - c1) = a + t (b - a)
        mat = np.column_stack([c2 - c1, a - b])
        if abs(np.linalg.det(mat)) <= tol * np.linalg.norm(c2 - c1) * np.linalg.norm(b - a):
            raise SplitError(f"edge {e}: interior points are parallel to the shared edge")
        s, t = np.linalg.solve(mat, a - c1)
        if not (tol < s < 1 - tol and tol < t < 1 - tol):
            raise SplitError(
                f"edge {e} ({u}, {v}): segment joining interior points of triangles "
                f"{ts[0]} and {ts[1]} misses the open shared edge (s={s:.3g}, t={t:.3g})")
        splits[e] = a + t * (b - a)
    points = np.vstack([mesh.vertices, splits, centers])
    macro = np.zeros((T, 7), dtype=int)
    subs = np.zeros((6 * T, 3), dtype=int)
    for m, tri in enumerate(mesh.triangles):
        macro[m, 0] = V + E + m
        macro[m, 1:4] = tri
        macro[m, 4:7] = V + mesh.triangle_edges[m]
        subs[6 * m:6 * m + 6] = macro[m][MacroSplit.SUBS]
    sc = SplitComplex(mesh, points, interior_rule, macro, subs)
    check_split(sc)
    return sc


def check_split(sc: SplitComplex) -> None:
    """Raise :class:`SplitError` unless every refinement invariant holds."""
    tol = config.TOL.geometry
    for s, tri in enumerate(sc.tris):
        if signed_area(tri) <= 0:
            raise SplitError(f"subtriangle {s} has non-positive area")
    for m in range(sc.mesh.nt):
        loc = sc.local(m)
        g = loc.grad_mu()
        for k in range(3):
            a, b = loc.edge_endpoints(k)
            pa, pm, pb = loc.points[a], loc.points[4 + k], loc.points[b]
            h = np.linalg.norm(pb - pa)
            if abs(_cross(pb - pa, pm - pa)) / h > tol * h:
                raise SplitError(f"split point of macro edge {loc.edge_ids[k]} is off the edge")
            gn = g[k] / np.linalg.norm(g[k])
            if np.linalg.norm(gn + loc.normals[k]) > tol or abs(g[k] @ loc.tangents[k]) > tol * np.linalg.norm(g[k]):
                raise SplitError(f"bubble gradient misaligned on fan {k} of macro {m}")
    singular_fans(sc)


def singular_fans(sc: SplitComplex) -> dict[int, tuple[int, ...]]:
    """Ordered subtriangles around each split point.

    Interior split points get ``K1..K4`` counter-clockwise, starting with the
    two subtriangles of the lower-indexed macro-triangle; boundary split
    points get ``K1, K2``.
    """
    tol = config.TOL.geometry
    mesh = sc.mesh
    out = {}
    for e in range(mesh.ne):
        z = sc.split_point(e)
        pz = sc.points[z]
        u, v = mesh.edges[e]
        pu, pv = sc.points[u], sc.points[v]
        h = np.linalg.norm(pv - pu)
        lines = [pv - pu]
        ks = []
        for t in mesh.edge_triangles[e]:
            k = list(mesh.triangle_edges[t]).index(e)
            ks += [(t, 6 * t + 2 * k), (t, 6 * t + 2 * k + 1)]
            lines.append(sc.points[sc.interior_point(t)] - pz)
        # every incident edge must lie on one of two lines
        if abs(_cross(pv - pu, pz - pu)) / h > tol * h:
            raise SplitError(f"split point {z} is not on macro edge {e}")
        if len(lines) == 3 and abs(_cross(lines[1], lines[2])) > tol * np.linalg.norm(lines[1]) * np.linalg.norm(lines[2]):
            raise SplitError(f"split point {z} is not a singular vertex")
        ang = []
        for _, s in ks:
            c = sc.points[sc.subtriangles[s]].mean(axis=0) - pz
            ang.append(np.arctan2(c[1], c[0]))
        order = list(np.argsort(ang))
        n = len(order)
        first_macro = min(t for t, _ in ks)
        for rot in range(n):
            seq = order[rot:] + order[:rot]
            if n == 4 and ks[seq[0]][0] == first_macro and ks[seq[1]][0] == first_macro:
                break
            if n == 2:
                d = (ang[seq[1]] - ang[seq[0]]) % (2 * np.pi)
                if d < np.pi:
                    break
        out[z] = tuple(ks[i][1] for i in seq)
    return out


def jump_vectors(sc: SplitComplex, e: int) -> tuple[np.ndarray, np.ndarray]:
    """Normals ``m1, m2`` to the interior line at split point of edge ``e``.

    ``m1`` points out of the subtriangle on the canonical start side.
    """
    z = sc.points[sc.split_point(e)]
    t = sc.mesh.edge_triangles[e][0]
    d = sc.points[sc.interior_point(t)] - z
    m = np.array([d[1], -d[0]]) / np.linalg.norm(d)
    tau = sc.canonical_tangent(e)
    if m @ tau < 0:
        m = -m
    return m, -m


def min_angle(verts: np.ndarray) -> float:
    verts = np.asarray(verts, dtype=float)
    out = np.pi
    for i in range(3):
        u = verts[(i + 1) % 3] - verts[i]
        v = verts[(i + 2) % 3] - verts[i]
        c = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        out = min(out, float(np.arccos(np.clip(c, -1.0, 1.0))))
    return out


def random_split(rng: np.random.Generator, min_degrees: float = 20.0, rule: str = "incenter") -> MacroSplit:
    """Split of a random triangle whose angles all exceed ``min_degrees``."""
    while True:
        verts = rng.uniform(-1.0, 1.0, (3, 2))
        if signed_area(verts) < 0:
            verts = verts[[0, 2, 1]]
        if min_angle(verts) > np.radians(min_degrees):
            return MacroSplit.from_triangle(*verts, rule=rule)
