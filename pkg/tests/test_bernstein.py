from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given

from psfeec import bernstein as bb
from psfeec.quadrature import (QuadratureDegreeError, reference_triangle_rule, segment_rule,
                               triangle_rule)

from strategies import seeds, triangles


def monomial_on(tri, lam, i, j):
    x = lam @ tri
    return x[:, 0] ** i * x[:, 1] ** j


def test_dimension_and_indices():
    for r in range(7):
        idx = bb.multi_indices(r)
        assert len(idx) == bb.dim(r) == comb(r + 2, 2)
        assert np.all(idx.sum(axis=1) == r)


def test_partition_of_unity(rng):
    lam = rng.dirichlet(np.ones(3), 20)
    for r in range(6):
        assert np.allclose(bb.basis(r, lam).sum(axis=1), 1.0, atol=1e-14)


@given(seeds)
def test_de_casteljau_matches_basis(seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(0, 7))
    c = rng.standard_normal(bb.dim(r))
    lam = rng.dirichlet(np.ones(3), 5)
    direct = bb.basis(r, lam) @ c
    assert np.allclose(bb.de_casteljau(c, lam), direct, rtol=1e-13, atol=1e-13)


@given(triangles(), seeds)
def test_interpolation_of_monomials_is_exact(tri, seed):
    rng = np.random.default_rng(seed)
    r = 4
    i, j = (int(v) for v in rng.integers(0, 3, 2))
    # least-squares fit on many points reproduces a degree <= r monomial exactly
    lam = rng.dirichlet(np.ones(3), 60)
    c, *_ = np.linalg.lstsq(bb.basis(r, lam), monomial_on(tri, lam, i, j), rcond=None)
    probe = rng.dirichlet(np.ones(3), 10)
    assert np.allclose(bb.de_casteljau(c, probe), monomial_on(tri, probe, i, j), atol=1e-9)


def test_derivative_matrix_against_finite_difference(rng):
    tri = np.array([[0.1, 0.0], [1.2, 0.3], [0.4, 0.9]])
    r = 4
    c = rng.standard_normal(bb.dim(r))
    g = bb.grad_barycentric(tri)
    lam = rng.dirichlet(np.ones(3), 4)
    for axis in range(2):
        d = bb.derivative_matrix(r, g[:, axis]) @ c
        h = 1e-6
        e = np.zeros(2)
        e[axis] = h
        xp = lam @ tri + e
        xm = lam @ tri - e
        fd = (bb.de_casteljau(c, bb.barycentric(tri, xp)) - bb.de_casteljau(c, bb.barycentric(tri, xm))) / (2 * h)
        assert np.allclose(bb.de_casteljau(d, lam), fd, atol=1e-6)


def test_elevation_preserves_values(rng):
    c = rng.standard_normal(bb.dim(3))
    lam = rng.dirichlet(np.ones(3), 7)
    e = bb.elevation_matrix(3, 2) @ c
    assert np.allclose(bb.de_casteljau(e, lam), bb.de_casteljau(c, lam), atol=1e-13)


def test_multiply(rng):
    a, b = rng.standard_normal(bb.dim(2)), rng.standard_normal(bb.dim(3))
    lam = rng.dirichlet(np.ones(3), 7)
    ab = bb.multiply(a, b, 2, 3)
    assert np.allclose(bb.de_casteljau(ab, lam), bb.de_casteljau(a, lam) * bb.de_casteljau(b, lam))


def test_integral_weights():
    lam, w = reference_triangle_rule(10)
    for r in range(6):
        assert np.allclose(w @ bb.basis(r, lam), bb.integral_weights(r), atol=1e-14)


def test_reference_triangle_integral_of_one():
    _, w, _ = triangle_rule(np.array([[0, 0], [1, 0], [0, 1]]), 0)
    assert w.sum() == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("deg", range(0, 13))
def test_triangle_rule_exactness(deg):
    # integral of x^i y^j over the reference triangle is i! j! / (i + j + 2)!
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    x, w, _ = triangle_rule(tri, deg)
    for i in range(deg + 1):
        j = deg - i
        exact = factorial(i) * factorial(j) / factorial(i + j + 2)
        assert w @ (x[:, 0] ** i * x[:, 1] ** j) == pytest.approx(exact, rel=1e-13)


def test_degree_six_monomial_on_general_triangle():
    import sympy as sp

    X, Y = sp.symbols("x y")
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]])
    exact = float(sp.integrate(sp.integrate(X**4 * Y**2, (Y, 0, 3 - 1.5 * X)), (X, 0, 2)))
    x, w, _ = triangle_rule(tri, 6)
    assert w @ (x[:, 0] ** 4 * x[:, 1] ** 2) == pytest.approx(exact, rel=1e-14)


def test_segment_rule():
    x, w, t = segment_rule(np.array([0.0, 0.0]), np.array([3.0, 4.0]), 7)
    assert w.sum() == pytest.approx(5.0)
    assert w @ t**7 == pytest.approx(5.0 / 8)


def test_quadrature_degree_limits():
    with pytest.raises(QuadratureDegreeError):
        reference_triangle_rule(-1)
