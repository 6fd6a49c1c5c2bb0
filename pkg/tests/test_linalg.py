import numpy as np
import pytest
from hypothesis import given, strategies as st

from psfeec import config
from psfeec.linalg import RankAmbiguityError, nullspace, numerical_rank, orthonormal_range, singular_values


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**31))
def test_rank_of_products(m, n, k, seed):
    rng = np.random.default_rng(seed)
    k = min(k, m, n)
    a = rng.standard_normal((m, k)) @ rng.standard_normal((k, n))
    assert numerical_rank(a) == k
    z = nullspace(a)
    assert z.shape == (n, n - k)
    assert np.allclose(z.T @ z, np.eye(n - k))
    if z.size:
        assert np.abs(a @ z).max() < 1e-10 * max(1.0, np.abs(a).max())
    assert orthonormal_range(a).shape[1] == k


def test_ambiguous_rank_is_refused():
    a = np.diag([1.0, 1e-9 * 1.5])
    with pytest.raises(RankAmbiguityError):
        numerical_rank(a)
    with pytest.raises(RankAmbiguityError):
        nullspace(np.array([[1.0, 1.0], [1.0, 1.0 + 3e-9]]))


def test_empty_and_zero_inputs():
    assert numerical_rank(np.zeros((0, 3))) == 0
    assert numerical_rank(np.zeros((2, 3))) == 0
    assert nullspace(np.zeros((0, 3))).shape == (3, 3)
    assert nullspace(np.zeros((2, 3))).shape == (3, 3)
    assert singular_values(np.zeros((0, 0))).size == 0
    with pytest.raises(ValueError):
        nullspace(np.zeros(3))


def test_row_scaling_does_not_change_nullspace():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 1e6, -1e6]])
    z = nullspace(a)
    assert z.shape[1] == 1 and np.allclose(np.abs(z[:, 0]), 1 / np.sqrt(3))


def test_set_tolerances_moves_band(monkeypatch):
    old = config.TOL
    try:
        t = config.set_tolerances(rank=1e-6, residual=1e-8)
        assert t.band == pytest.approx((1e-8, 1e-4)) and config.TOL.residual == 1e-8
        assert numerical_rank(np.diag([1.0, 1e-9 * 1.5])) == 1
    finally:
        config.TOL = old


def test_environment_override(monkeypatch):
    monkeypatch.setenv("PSFEEC_TOL_RANK", "1e-8")
    monkeypatch.setenv("PSFEEC_TOL_RESIDUAL", "1e-7")
    t = config.Tolerances.from_env()
    assert t.rank == 1e-8 and t.band == pytest.approx((1e-10, 1e-6)) and t.residual == 1e-7
