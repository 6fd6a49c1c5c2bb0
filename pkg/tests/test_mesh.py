import io
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from psfeec.mesh import (MacroMesh, MeshError, SplitError, annulus_mesh, barycenter, check_split,
                         dumps_macro_mesh, hexagon_mesh, incenter, load_macro_mesh, perturbed_square_mesh,
                         powell_sabin_refine, refine_uniform, singular_fans, unit_square_mesh)

from strategies import triangles


def test_square_counts():
    m = unit_square_mesh(1)
    assert (m.nv, m.ne, m.nt, m.euler) == (4, 5, 2, 1)
    assert m.boundary_edges.sum() == 4


def test_single_triangle():
    m = load_macro_mesh(io.StringIO("3 1\n0 0\n1 0\n0 1\n0 1 2\n"))
    assert (m.nv, m.ne, m.nt) == (3, 3, 1)
    assert m.boundary_edges.all()


def test_clockwise_triangle_is_reoriented():
    m = load_macro_mesh(io.StringIO("3 1\n0 0\n0 1\n1 0\n0 1 2\n"))
    assert list(m.triangles[0]) == [0, 2, 1]


def test_node_ele_format():
    node = io.StringIO("4 2 0 0\n1 0 0\n2 1 0\n3 1 1\n4 0 1\n")
    ele = io.StringIO("2 3 0\n1 1 2 3\n2 1 3 4\n")
    m = load_macro_mesh((node, ele), format="node-ele")
    assert (m.nv, m.ne, m.nt) == (4, 5, 2)


@pytest.mark.parametrize("text, msg", [
    ("", "line 1"),
    ("3 1\n0 0\n1 0\n", "expected"),
    ("3 1\n0 0\n1 x\n0 1\n0 1 2\n", "line 3"),
    ("3 1\n0 0\n1 0\n0 0\n0 1 2\n", "duplicate"),
    ("3 1\n0 0\n1 0\n2 0\n0 1 2\n", "degenerate"),
    ("5 3\n0 0\n1 0\n0 1\n0 -1\n1 1\n0 1 2\n0 3 1\n0 1 4\n", "shared by 3"),
])
def test_load_errors(text, msg):
    with pytest.raises(MeshError, match=msg):
        load_macro_mesh(io.StringIO(text))


def test_roundtrip():
    m = perturbed_square_mesh(2, 0.2, 1)
    m2 = load_macro_mesh(io.StringIO(dumps_macro_mesh(m)))
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)


def test_incenter_reference():
    c = incenter((0, 0), (1, 0), (0, 1))
    assert np.allclose(c, 1 / (2 + np.sqrt(2)))


def test_incenter_equilateral():
    a = np.array([[np.cos(t), np.sin(t)] for t in (0, 2 * np.pi / 3, 4 * np.pi / 3)])
    assert np.allclose(incenter(*a), 0, atol=1e-15)


@given(triangles(), st.floats(0, 2 * np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_incenter_equivariant(tri, angle, dx, dy):
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = tri @ rot.T + [dx, dy]
    assert np.allclose(incenter(*moved), incenter(*tri) @ rot.T + [dx, dy], atol=1e-12)


@given(triangles())
def test_incenter_equidistant(tri):
    c = incenter(*tri)
    d = []
    for k in range(3):
        a, b = tri[k], tri[(k + 1) % 3]
        t = (b - a) / np.linalg.norm(b - a)
        d.append(abs((c - a) @ np.array([t[1], -t[0]])))
    assert np.ptp(d) < 1e-12 * max(d)


def test_incenter_degenerate():
    with pytest.raises(MeshError):
        incenter((0, 0), (1, 0), (2, 0))


def test_one_macro():
    sc = powell_sabin_refine(load_macro_mesh(io.StringIO("3 1\n0 0\n1 0\n0 1\n0 1 2\n")))
    assert len(sc.points) == 7 and sc.n_sub == 6
    assert len(sc.half_edges()) == 6


def test_square_refinement(square):
    fans = singular_fans(square)
    assert square.n_sub == 12
    assert len(fans) == 5
    assert sorted(len(f) for f in fans.values()) == [2, 2, 2, 2, 4]


def test_interior_fan_alternates(square):
    fans = singular_fans(square)
    (inner,) = [f for f in fans.values() if len(f) == 4]
    macros = [s // 6 for s in inner]
    assert macros == [0, 0, 1, 1]
    # counter-clockwise around the split point
    z = square.points[[z for z, f in fans.items() if len(f) == 4][0]]
    ang = [np.arctan2(*(square.tris[s].mean(axis=0) - z)[::-1]) for s in inner]
    steps = np.diff(np.unwrap(ang))
    assert np.all(steps > 0)


@pytest.mark.parametrize("mesh", [unit_square_mesh(1), unit_square_mesh(3), perturbed_square_mesh(3, 0.25, 2),
                                  hexagon_mesh(), annulus_mesh(), refine_uniform(hexagon_mesh())],
                         ids=["square1", "square3", "perturbed", "hexagon", "annulus", "hexagon-refined"])
def test_refinement_invariants(mesh):
    sc = powell_sabin_refine(mesh)
    assert sc.n_sub == 6 * mesh.nt
    assert len(singular_fans(sc)) == mesh.ne
    assert len(sc.half_edges()) == 2 * mesh.ne
    for m in range(mesh.nt):
        loc = sc.local(m)
        g = loc.grad_mu()
        for k in range(3):
            assert np.allclose(g[k] / np.linalg.norm(g[k]), -loc.normals[k], atol=1e-12)
            assert abs(g[k] @ loc.tangents[k]) <= 1e-12 * np.linalg.norm(g[k])
    for e, ts in enumerate(mesh.edge_triangles):
        if len(ts) == 2:
            z = sc.points[sc.split_point(e)]
            c1, c2 = (sc.points[sc.interior_point(t)] for t in ts)
            d1, d2 = z - c1, c2 - c1
            assert abs(d1[0] * d2[1] - d1[1] * d2[0]) <= 1e-12 * np.linalg.norm(d2) ** 2


def test_barycenter_rule_valid_or_error():
    verts = np.array([[0, 0], [10, 0], [5, 0.3], [5, -0.3]])
    mesh = MacroMesh(verts, np.array([[0, 1, 2], [0, 3, 1]]))
    for rule in ("incenter", "barycenter"):
        try:
            check_split(powell_sabin_refine(mesh, rule))
        except SplitError:
            pass


def test_barycenter_fails_on_obtuse_pair():
    # the barycenters of this pair are joined by a segment missing the shared edge
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.72, 2.97], [2.69, -0.24]])
    mesh = MacroMesh(verts, np.array([[0, 1, 2], [0, 3, 1]]))
    with pytest.raises(SplitError):
        powell_sabin_refine(mesh, "barycenter")
    powell_sabin_refine(mesh, "incenter")


def test_split_point_off_edge_rejected(square):
    pts = square.points.copy()
    fans = singular_fans(square)
    (z,) = [z for z, f in fans.items() if len(f) == 4]
    pts[z] += [1e-3, -2e-3]
    bad = replace(square, points=pts)
    with pytest.raises(SplitError):
        singular_fans(bad)


def test_complex_json(square):
    data = square.to_json()
    assert len(data["subtriangles"]) == 12
    assert sum(p["interior"] for p in data["singular_points"]) == 1
    assert barycenter((0, 0), (3, 0), (0, 3)) == pytest.approx([1, 1])
