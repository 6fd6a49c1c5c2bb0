import numpy as np
import pytest

from psfeec.dofs import DofError, commute_residuals
from psfeec.fields import random_wave_field
from psfeec.globalspace import (GLOBAL_CHAINS, GLOBAL_FAMILIES, GLOBAL_MIN_DEGREE, assemble_global, conformity_residual,
                                coordinates, dof_values, global_dimension_formula, global_project, oracle_dimension,
                                theta_z, verify_global_exactness)
from psfeec.mesh import (MacroMesh, annulus_mesh, hexagon_mesh, perturbed_square_mesh, powell_sabin_refine,
                         singular_fans, unit_square_mesh)
from psfeec.poly import PiecewisePolynomial, divergence

UNSTRUCTURED = MacroMesh(np.array([(0, 0), (2, 0), (2.4, 1.3), (1, 2.2), (-0.3, 1.2), (0.8, 0.7), (1.4, 1.1)], float),
                         np.array([(0, 1, 5), (1, 6, 5), (1, 2, 6), (2, 3, 6), (3, 5, 6), (3, 4, 5), (4, 0, 5)]))
MESHES = {
    "square1": unit_square_mesh(1),
    "square2": unit_square_mesh(2),
    "perturbed": perturbed_square_mesh(2, 0.2, 3),
    "hexagon": hexagon_mesh(),
    "unstructured": UNSTRUCTURED,
}


@pytest.fixture(scope="module")
def complexes():
    return {k: powell_sabin_refine(m) for k, m in MESHES.items()}


def test_fig1_dimensions(square):
    assert assemble_global(square, "S0", 2).dim == 12
    assert assemble_global(square, "L1", 1).dim == 22
    assert assemble_global(square, "V2", 0).dim == 11


@pytest.mark.parametrize("name", list(MESHES))
def test_dimensions_match_formulas_and_oracle(complexes, name):
    sc, m = complexes[name], MESHES[name]
    for family in GLOBAL_FAMILIES:
        for d in range(GLOBAL_MIN_DEGREE[family], GLOBAL_MIN_DEGREE[family] + 3):
            dim = assemble_global(sc, family, d).dim
            assert dim == global_dimension_formula(family, d, m.nv, m.ne, m.nt) == oracle_dimension(sc, family, d)


@pytest.mark.parametrize("family", GLOBAL_FAMILIES)
def test_conformity(complexes, family):
    for name in ("square2", "unstructured"):
        gs = assemble_global(complexes[name], family, GLOBAL_MIN_DEGREE[family] + 1)
        assert conformity_residual(gs) <= 1e-9


def test_inadmissible_degree(square):
    with pytest.raises(DofError):
        assemble_global(square, "S1", 1)
    with pytest.raises(DofError):
        assemble_global(square, "W", 2)


def test_assembly_independent_of_threads(complexes):
    sc = complexes["square2"]
    a = assemble_global(sc, "L1", 2, threads=1)
    b = assemble_global(sc, "L1", 2, threads=3)
    assert a.keys == b.keys and (a.G != b.G).nnz == 0


def _interior_split_point(sc):
    fans = singular_fans(sc)
    return next(z for z, ks in sorted(fans.items()) if len(ks) == 4), fans


def _piecewise_constant(sc, values):
    return PiecewisePolynomial(sc.tris, 0, np.asarray(values, float).reshape(-1, 1, 1))


def test_theta_continuous_is_zero(square, rng):
    gs = assemble_global(square, "L2", 2)
    z, _ = _interior_split_point(square)
    q = gs.element(rng.standard_normal(gs.dim))
    assert abs(theta_z(q, square, z)) <= 1e-12 * np.abs(q.coeffs).max()


def test_theta_of_divergence_is_zero(square, rng):
    gs = assemble_global(square, "L1", 2)
    z, _ = _interior_split_point(square)
    q = divergence(gs.element(rng.standard_normal(gs.dim)))
    assert abs(theta_z(q, square, z)) <= 1e-10 * np.abs(q.coeffs).max()


def test_theta_single_line_jump_vanishes(square):
    z, fans = _interior_split_point(square)
    k1, k2, k3, k4 = fans[z]
    for side in ((k1, k2), (k2, k3)):
        vals = np.zeros(square.n_sub)
        vals[list(side)] = 1.7
        assert abs(theta_z(_piecewise_constant(square, vals), square, z)) < 1e-14


def test_theta_checkerboard_sign(square):
    z, fans = _interior_split_point(square)
    k1, k2, k3, k4 = fans[z]
    vals = np.zeros(square.n_sub)
    vals[[k1, k3]] = 1.0
    assert theta_z(_piecewise_constant(square, vals), square, z) == pytest.approx(2.0)
    vals = np.zeros(square.n_sub)
    vals[[k2, k4]] = 1.0
    assert theta_z(_piecewise_constant(square, vals), square, z) == pytest.approx(-2.0)


def test_theta_rejects_other_points(square):
    fans = singular_fans(square)
    boundary = next(z for z, ks in fans.items() if len(ks) == 2)
    with pytest.raises(ValueError):
        theta_z(_piecewise_constant(square, np.zeros(square.n_sub)), square, boundary)
    with pytest.raises(ValueError):
        theta_z(_piecewise_constant(square, np.zeros(square.n_sub)), square, 0)


@pytest.mark.parametrize("which", ["thm1", "thm2"])
def test_global_commuting_diagrams(square, which):
    project = lambda chain, deg, f: global_project(square, chain, deg, f)
    rows = commute_residuals(None, which, 2, trials=20, rng=np.random.default_rng(5), project=project)
    assert max(max(r["rot_residual"], r["div_residual"]) for r in rows) <= 1e-9
    rows = commute_residuals(None, which, 3, trials=6, rng=np.random.default_rng(6), project=project)
    assert max(max(r["rot_residual"], r["div_residual"]) for r in rows) <= 1e-9


@pytest.mark.parametrize("chain, r", [("pi0", 3), ("pi1", 2), ("pi2", 1), ("chi1", 2), ("chi2", 1)])
def test_global_projection_is_identity_on_space(complexes, rng, chain, r):
    from psfeec.globalspace import FAMILY_CHAIN
    family = next(f for f, c in FAMILY_CHAIN.items() if c == GLOBAL_CHAINS[chain])
    sc = complexes["perturbed"]
    gs = assemble_global(sc, family, r)
    f = gs.element(rng.standard_normal(gs.dim))
    g = global_project(sc, chain, r, f)
    assert np.abs((g - f).coeffs).max() <= 1e-11 * np.abs(f.coeffs).max()
    assert coordinates(gs, g)[1] <= 1e-11


def test_global_projection_of_smooth_field_is_conforming(square, rng):
    f = random_wave_field(rng, 1)
    gs = assemble_global(square, "S0", 3)
    g = global_project(square, "pi0", 3, f)
    x, res = coordinates(gs, g)
    assert res <= 1e-11
    assert np.allclose(x, dof_values(gs, f), rtol=1e-9, atol=1e-9 * np.abs(x).max())


def test_unknown_projection(square):
    with pytest.raises(DofError):
        global_project(square, "pi7", 2, random_wave_field(np.random.default_rng(0), 1))


def test_fig1_exactness(square):
    rep = verify_global_exactness(square, 2, "SLV")
    assert rep["dims"] == [12, 22, 11] and rep["rank_div"] == 11 and rep["rank_rot"] == 11
    assert rep["exact"] and rep["euler"] == 1
    assert verify_global_exactness(square, 3, "SSL")["exact"]


@pytest.mark.parametrize("name", ["square2", "perturbed", "hexagon", "unstructured"])
@pytest.mark.parametrize("chain, r", [("SLV", 2), ("SLV", 3), ("SSL", 3), ("SSL", 4)])
def test_exactness_on_meshes(complexes, name, chain, r):
    rep = verify_global_exactness(complexes[name], r, chain)
    assert rep["exact"] and rep["dims_match"] and rep["kernel_rot"] == 1


def test_exactness_degree_guard(square):
    with pytest.raises(DofError):
        verify_global_exactness(square, 2, "SSL")


def test_annulus_deficit():
    sc = powell_sabin_refine(annulus_mesh())
    rep = verify_global_exactness(sc, 2, "SLV")
    assert rep["euler"] == 0 and rep["dims_match"]
    assert rep["exactness_deficit"] == 1 and not rep["exact"]
