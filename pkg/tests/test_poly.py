import numpy as np
import pytest
from hypothesis import given

from psfeec import bernstein as bb
from psfeec.poly import (PiecewisePolynomial, TraceError, div_matrix, divergence, edge_trace,
                         factor_out_mu, integrate, jump, mu_field, mu_power, rot_matrix, rot_scalar)
from psfeec.spaces import build_space

from strategies import seeds, splits


def random_pp(split, r, ncomp, rng):
    return PiecewisePolynomial(split.tris, r, rng.standard_normal((6, ncomp, bb.dim(r))))


def sample_points(split, n=45):
    lam = bb.multi_indices(8)[:n] / 8
    return lam


def test_rot_of_y(ref):
    q = PiecewisePolynomial.fit(ref.tris, 1, lambda x: x[1])
    v = rot_scalar(q)
    assert np.allclose(v.coeffs[:, 0], 1) and np.allclose(v.coeffs[:, 1], 0)


def test_rot_of_constant(ref):
    assert rot_scalar(PiecewisePolynomial.constant(ref.tris, 3.0, 2)).norm() < 1e-13


def test_div_of_identity(ref):
    v = PiecewisePolynomial.fit(ref.tris, 1, lambda x: x, ncomp=2)
    assert np.allclose(divergence(v).coeffs, 2)


def test_div_of_half_x(ref):
    v = PiecewisePolynomial.fit(ref.tris, 1, lambda x: 0.5 * x, ncomp=2)
    d = divergence(v)
    assert np.allclose(d.coeffs, 1)
    assert integrate(d)[0] == pytest.approx(ref.area)


@given(splits(), seeds)
def test_div_rot_vanishes(split, seed):
    q = random_pp(split, 4, 1, np.random.default_rng(seed))
    assert divergence(rot_scalar(q)).norm() <= 1e-13 * max(1, rot_scalar(q).norm())


@given(splits(), seeds)
def test_operators_are_linear_and_lower_degree(split, seed):
    rng = np.random.default_rng(seed)
    a, b = random_pp(split, 3, 1, rng), random_pp(split, 3, 1, rng)
    lhs = rot_scalar(2.0 * a + b)
    rhs = 2.0 * rot_scalar(a) + rot_scalar(b)
    assert lhs.degree == 2 and (lhs - rhs).norm() < 1e-12 * lhs.norm()
    v, w = random_pp(split, 3, 2, rng), random_pp(split, 3, 2, rng)
    assert divergence(v).degree == 2
    assert (divergence(v - 3.0 * w) - (divergence(v) - 3.0 * divergence(w))).norm() < 1e-12 * divergence(v).norm()


def test_operator_matrices_match(ref, rng):
    q = random_pp(ref, 3, 1, rng)
    assert np.allclose(rot_matrix(ref.tris, 3) @ q.vector, rot_scalar(q).vector)
    v = random_pp(ref, 3, 2, rng)
    assert np.allclose(div_matrix(ref.tris, 3) @ v.vector, divergence(v).vector)


def test_mu_values(ref):
    mu = mu_field(ref)
    assert mu(ref.points[0])[0] == pytest.approx(1)
    for i in range(1, 7):
        s = mu.locate(ref.points[i])
        assert mu.evaluate_at(ref.points[i], s)[0, 0] == pytest.approx(0, abs=1e-15)


@given(splits())
def test_mu_gradient_directions(split):
    g = mu_field(split).grad()
    for k in range(3):
        for s in (2 * k, 2 * k + 1):
            gk = g.coeffs[s, :, 0]
            assert abs(gk @ split.tangents[k]) < 1e-12 * np.linalg.norm(gk)
            assert np.allclose(gk / np.linalg.norm(gk), -split.normals[k], atol=1e-12)


def test_factor_out_mu_simple(ref):
    mu = mu_field(ref)
    assert np.allclose(factor_out_mu(mu).coeffs, 1)
    assert (factor_out_mu(mu * mu) - mu).norm() < 1e-14
    with pytest.raises(TraceError):
        factor_out_mu(PiecewisePolynomial.constant(ref.tris, 1.0, 2))


@given(splits(), seeds)
def test_factor_out_mu_right_inverse(split, seed):
    sp = build_space(split, "S0", True, 4)
    q = sp.random_element(np.random.default_rng(seed))
    p = factor_out_mu(q)
    lam = sample_points(split)
    prod = mu_field(split) * p
    for s in range(6):
        assert np.allclose(prod.evaluate(lam, s), q.evaluate(lam, s), atol=1e-10 * q.norm())
    # continuity of p across interior edges
    for far in range(1, 7):
        owners = [s for s in range(6) if far in split.SUBS[s]]
        x = split.points[0] + 0.37 * (split.points[far] - split.points[0])
        assert p.evaluate_at(x, owners[0]) == pytest.approx(p.evaluate_at(x, owners[1]), abs=1e-10 * q.norm())


def test_mu_power(ref):
    mu = mu_field(ref)
    assert (mu_power(ref.tris, 3) - mu * mu * mu).norm() < 1e-14


def test_integrals(ref):
    one = PiecewisePolynomial.constant(ref.tris, 1.0)
    assert integrate(one)[0] == pytest.approx(0.5)
    # linear average per subtriangle: |S| * mean of vertex values
    mu = mu_field(ref)
    expected = sum(abs(bb.signed_area(t)) / 3 for t in ref.tris)
    assert integrate(mu)[0] == pytest.approx(expected)
    assert expected == pytest.approx(ref.area / 3)


def test_traces(ref, rng):
    mu = mu_field(ref)
    for k in range(3):
        assert edge_trace(mu, ref, k).norm() < 1e-15
    q = build_space(ref, "S0", False, 3).random_element(rng)
    v = rot_scalar(q)
    for k in range(3):
        tq = edge_trace(q, ref, k)
        a, b = ref.edge_endpoints(k)
        lengths = tq.lengths
        s = np.linspace(0.05, sum(lengths) - 0.05, 9)
        h = 1e-6
        dq = (tq(s + h) - tq(s - h)) / (2 * h)
        assert np.allclose(edge_trace(v, ref, k, "normal-component")(s), dq, atol=1e-6)
        dn = edge_trace(q, ref, k, "normal-derivative")(s)
        assert np.allclose(edge_trace(v, ref, k, "tangential-component")(s), -dn, atol=1e-12)


def test_jump_antisymmetry(ref, rng):
    p = random_pp(ref, 2, 1, rng)
    for k in range(3):
        d, m1 = jump(p, ref, k)
        z = ref.points[4 + k]
        p1, p2 = p.evaluate_at(z, 2 * k)[0, 0], p.evaluate_at(z, 2 * k + 1)[0, 0]
        assert d == pytest.approx(p1 - p2)
        # swapping the two triangles flips the normal and the difference together
        assert np.allclose(d * m1, -(p2 - p1) * m1)
        assert abs(m1 @ (ref.points[0] - z)) < 1e-14


@given(splits(), seeds)
def test_evaluation_matches_fit(split, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((4, 4))

    def mono(x):
        return sum(c[i, j] * x[0] ** i * x[1] ** j for i in range(4) for j in range(4 - i))

    f = PiecewisePolynomial.fit(split.tris, 3, mono)
    x = split.points[0] + 0.3 * (split.points[1] - split.points[0]) + 0.1 * (split.points[5] - split.points[0])
    assert f(x)[0] == pytest.approx(mono(x), rel=1e-12, abs=1e-12)


def test_json_roundtrip(ref, rng):
    p = random_pp(ref, 2, 2, rng)
    q = PiecewisePolynomial.from_json(p.to_json())
    assert np.array_equal(p.coeffs, q.coeffs) and q.rank == "vector2"
