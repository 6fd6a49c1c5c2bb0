import dataclasses

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings

from psfeec.dofs import (DOF_FAMILIES, MIN_DEGREE, DofError, build_dofs, c1_spline_constraints, commute_residuals,
                         dof_count_formula, dual_basis, edge_c1_dofs, edge_unisolvence,
                         idempotence_residual, local_project, make_projector, projector, psi_polynomial,
                         unisolvence_report)
from psfeec.fields import PiecewiseSum, random_wave_field
from psfeec.linalg import nullspace
from psfeec.mesh import reference_split
from psfeec.spaces import build_space

from strategies import seeds, splits

x = sp.Symbol("x")


def test_psi_low_orders():
    assert psi_polynomial(1).as_expr() == 1 - x
    assert sp.expand(psi_polynomial(2).as_expr() - (3 * x**2 - 4 * x + 1)) == 0


@pytest.mark.parametrize("r", range(1, 9))
def test_psi_system(r):
    psi = psi_polynomial(r).as_expr()
    assert psi.subs(x, 0) == 1 and psi.subs(x, 1) == 0
    for k in range(r - 1):
        assert abs(float(sp.integrate(psi * x**k, (x, 0, 1)))) < 1e-13
    assert sp.diff(psi, x).subs(x, 0) != 0
    assert sp.degree(psi, x) <= r


def test_psi_rejects_degree_zero():
    with pytest.raises(DofError):
        psi_polynomial(0)


def _spline_dim(r, a, m, b):
    return nullspace(c1_spline_constraints(r, a, m, b)).shape[1]


@pytest.mark.parametrize("r", range(1, 9))
@pytest.mark.parametrize("variant", ["edge1", "edge2"])
def test_edge_dofs_unisolvent(r, variant):
    d = edge_c1_dofs(r, variant, 0.0, 0.37, 1.0)
    assert len(d) == 2 * r == _spline_dim(r, 0.0, 0.37, 1.0)
    smin, smax = edge_unisolvence(d)
    assert smin > 1e-9 * smax


def test_edge_counts():
    assert len(edge_c1_dofs(3, "edge1")) == 6
    assert len(edge_c1_dofs(2, "edge2")) == 4
    assert edge_c1_dofs(1, "edge2").labels == ("z(a)", "z(b)")


def test_edge_dofs_errors():
    with pytest.raises(DofError):
        edge_c1_dofs(0)
    with pytest.raises(DofError):
        edge_c1_dofs(2, "edge3")
    with pytest.raises(DofError):
        edge_c1_dofs(2, "edge2", 0.0, 1.2, 1.0)


@pytest.mark.parametrize("family, r, n", [("S0", 2, 9), ("L1", 1, 14), ("V2", 0, 6)])
def test_known_counts(ref, family, r, n):
    assert len(build_dofs(ref, family, r)) == n


def test_powell_sabin_dofs(ref):
    kinds = {f.kind for f in build_dofs(ref, "S0", 2).functionals}
    anchors = {f.anchor for f in build_dofs(ref, "S0", 2).functionals}
    assert all(a[0] == "vertex" for a in anchors) and len(anchors) == 3
    assert len(kinds) >= 1


def test_v2_lowest_order_groups(ref):
    kinds = [f.kind for f in build_dofs(ref, "V2", 0).functionals]
    assert kinds.count("jump-of-value") == 3


@pytest.mark.parametrize("family", DOF_FAMILIES)
@pytest.mark.parametrize("r", range(1, 9))
def test_count_identities(family, r):
    sym = sp.Symbol("r")
    closed = {"S0": 3 * sym**2 - 3 * sym + 3, "L1": 6 * sym**2 + 6 * sym + 2, "V2": 3 * sym**2 + 9 * sym + 6,
              "S1": 6 * sym**2 + 3, "L2": 3 * sym**2 + 3 * sym + 1}[family]
    assert dof_count_formula(family, r) == closed.subs(sym, r)
    if r >= MIN_DEGREE[family] and r <= 5:
        assert len(build_dofs(reference_split(), family, r)) == dof_count_formula(family, r)
        assert build_space(reference_split(), family, False, r).dim == dof_count_formula(family, r)


@pytest.mark.parametrize("family", DOF_FAMILIES)
def test_inadmissible_degree(ref, family):
    with pytest.raises(DofError):
        build_dofs(ref, family, MIN_DEGREE[family] - 1)


@pytest.mark.parametrize("r", range(2, 6))
def test_s0_unisolvent_on_reference(ref, r):
    rep = unisolvence_report(build_space(ref, "S0", False, r), build_dofs(ref, "S0", r))
    assert rep.verdict and rep.size == 3 * r * r - 3 * r + 3


@settings(max_examples=20)
@given(splits())
def test_s1_unisolvent_on_random_splits(split):
    for r in range(1, 5):
        assert unisolvence_report(build_space(split, "S1", False, r), build_dofs(split, "S1", r)).verdict


@settings(max_examples=8)
@given(splits())
def test_all_families_unisolvent_on_random_splits(split):
    for family in DOF_FAMILIES:
        for r in range(MIN_DEGREE[family], MIN_DEGREE[family] + 3):
            assert unisolvence_report(build_space(split, family, False, r), build_dofs(split, family, r)).verdict


def test_duplicated_functional_fails(ref):
    ds = build_dofs(ref, "S0", 2)
    rows = ds.rows(2).copy()
    rows[1] = rows[0]
    dup = dataclasses.replace(ds, _rows={2: rows})
    rep = unisolvence_report(build_space(ref, "S0", False, 2), dup)
    assert not rep.verdict
    with pytest.raises(DofError):
        dual_basis(build_space(ref, "S0", False, 2), dup)


def test_size_mismatch(ref):
    with pytest.raises(DofError):
        unisolvence_report(build_space(ref, "S0", False, 3), build_dofs(ref, "S0", 2))


@pytest.mark.parametrize("family", DOF_FAMILIES)
def test_duality(ref, family):
    r = MIN_DEGREE[family] + 1
    sp_ = build_space(ref, family, False, r)
    ds = build_dofs(ref, family, r)
    nodal = dual_basis(sp_, ds)
    assert np.abs(ds.rows(r) @ nodal - np.eye(sp_.dim)).max() < 1e-10


@pytest.mark.parametrize("chain, r", [("Pi0", 3), ("Pi1", 2), ("Pi2", 1), ("varpi1", 2), ("varpi2", 1)])
def test_idempotence(ref, rng, chain, r):
    assert idempotence_residual(ref, chain, r, rng) < 1e-11


def test_projection_of_higher_degree_matches_dofs(ref, rng):
    r = 3
    P = projector(ref, "Pi0", r)
    big = build_space(ref, "S0", False, r + 1)
    f = big.random_element(rng)
    g = P(f)
    assert not np.allclose(g.elevate(1).vector, f.vector, atol=1e-6)
    dv = P.dofs.apply(f)
    assert np.abs(P.dofs.apply(g) - dv).max() <= 1e-11 * np.abs(dv).max()


def test_projection_is_linear(ref, rng):
    f, g = random_wave_field(rng, 2), random_wave_field(rng, 2)
    a = local_project(ref, "Pi1", 2, f).vector + 2.5 * local_project(ref, "Pi1", 2, g).vector
    P = projector(ref, "Pi1", 2)
    both = P.nodal @ (P.dofs.apply(f) + 2.5 * P.dofs.apply(g))
    assert np.abs(a - both).max() <= 1e-11 * np.abs(a).max()


def test_jump_reproduced_for_discontinuous_input(ref, rng):
    r = 1
    P = projector(ref, "Pi2", r)
    q = build_space(ref, "V2", False, r).random_element(rng)
    f = PiecewiseSum(q, random_wave_field(rng, 1))
    g = P(f)
    jumps = [j for j, fn in enumerate(P.dofs.functionals) if fn.kind == "jump-of-value"]
    assert len(jumps) == 3
    assert np.abs(P.dofs.apply(g)[jumps] - P.dofs.apply(f)[jumps]).max() < 1e-11 * np.abs(q.coeffs).max()
    assert np.abs(P.dofs.apply(f)[jumps]).max() > 1e-3


@pytest.mark.parametrize("family", ["S0", "L2", "L1"])
def test_projection_independent_of_test_basis(ref, family):
    r = MIN_DEGREE[family] + 2
    f = random_wave_field(np.random.default_rng(3), 2 if family == "L1" else 1)
    a = make_projector(ref, family, r)(f)
    b = make_projector(ref, family, r, rng=np.random.default_rng(11))(f)
    assert np.abs((a - b).coeffs).max() <= 1e-10 * np.abs(a.coeffs).max()


@pytest.mark.parametrize("which", ["thm1", "thm2"])
@pytest.mark.parametrize("r", [2, 3, 4])
def test_commuting_diagrams(ref, which, r):
    rows = commute_residuals(ref, which, r, trials=50, rng=np.random.default_rng(r))
    assert len(rows) == 50
    assert max(max(row["rot_residual"], row["div_residual"]) for row in rows) <= 1e-9


@settings(max_examples=5)
@given(splits(), seeds)
def test_commuting_on_random_splits(split, seed):
    for which in ("thm1", "thm2"):
        rows = commute_residuals(split, which, 3, trials=4, rng=np.random.default_rng(seed))
        assert max(max(row["rot_residual"], row["div_residual"]) for row in rows) <= 1e-9


def test_apply_rejects_wrong_rank(ref, rng):
    ds = build_dofs(ref, "S0", 2)
    with pytest.raises(DofError):
        ds.apply(random_wave_field(rng, 2))
    with pytest.raises(DofError):
        build_dofs(ref, "V1", 2)


def test_literal_lowest_s1_list_is_overdetermined(ref):
    literal = build_dofs(ref, "S1", 1, literal=True)
    assert len(literal) == 12 > build_space(ref, "S1", False, 1).dim == len(build_dofs(ref, "S1", 1)) == 9
