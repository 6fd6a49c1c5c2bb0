"""Bernstein-Bezier primitives on a single triangle and on a segment.

Multi-indices ``(a0, a1, a2)`` with ``a0 + a1 + a2 = r`` are stored in
descending lexicographic order, so ``(r, 0, 0)`` comes first.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np


def dim(r: int) -> int:
    return (r + 1) * (r + 2) // 2 if r >= 0 else 0


@lru_cache(maxsize=None)
def multi_indices(r: int) -> np.ndarray:
    out = [(i, j, r - i - j) for i in range(r, -1, -1) for j in range(r - i, -1, -1)]
    arr = np.array(out, dtype=int).reshape(-1, 3)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def index_of(r: int) -> dict:
    return {tuple(a): k for k, a in enumerate(multi_indices(r))}


@lru_cache(maxsize=None)
def multinomial(r: int) -> np.ndarray:
    al = multi_indices(r)
    return np.array([factorial(r) // (factorial(a) * factorial(b) * factorial(c))
                     for a, b, c in al], dtype=float)


def barycentric(tri: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points ``x`` (N, 2) in triangle ``tri`` (3, 2)."""
    tri = np.asarray(tri, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.array([tri[1] - tri[0], tri[2] - tri[0]]).T
    l12 = np.linalg.solve(t, (x - tri[0]).T).T
    return np.column_stack([1.0 - l12.sum(axis=1), l12])


def grad_barycentric(tri: np.ndarray) -> np.ndarray:
    """Constant gradients of the three barycentric coordinates, shape (3, 2)."""
    tri = np.asarray(tri, dtype=float)
    t = np.array([tri[1] - tri[0], tri[2] - tri[0]])
    g12 = np.linalg.inv(t).T  # rows: grad lambda_1, grad lambda_2
    return np.vstack([-g12.sum(axis=0), g12])


def signed_area(tri: np.ndarray) -> float:
    tri = np.asarray(tri, dtype=float)
    (x0, y0), (x1, y1), (x2, y2) = tri
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def basis(r: int, lam: np.ndarray) -> np.ndarray:
    """Values of all degree-``r`` Bernstein polynomials, shape (N, dim(r))."""
    lam = np.atleast_2d(lam)
    if r < 0:
        return np.zeros((lam.shape[0], 0))
    al = multi_indices(r)
    powers = np.prod(lam[:, None, :] ** al[None, :, :], axis=2)
    return powers * multinomial(r)[None, :]


def basis_grad(r: int, lam: np.ndarray, glam: np.ndarray) -> np.ndarray:
    """Cartesian gradients of the Bernstein basis, shape (N, dim(r), 2)."""
    lam = np.atleast_2d(lam)
    out = np.zeros((lam.shape[0], dim(r), 2))
    if r <= 0:
        return out
    low = basis(r - 1, lam)
    idx = index_of(r - 1)
    for k, a in enumerate(multi_indices(r)):
        for c in range(3):
            if a[c] > 0:
                b = list(a)
                b[c] -= 1
                out[:, k, :] += r * low[:, idx[tuple(b)], None] * glam[c][None, :]
    return out


def de_casteljau(coeffs: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Evaluate by repeated convex combination; ``coeffs`` has shape (..., dim(r)).

    ``lam`` is one barycentric triple or an (N, 3) array of them.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 2:
        return np.stack([de_casteljau(coeffs, row) for row in lam])
    nb = coeffs.shape[-1]
    r = int(round((np.sqrt(8 * nb + 1) - 3) / 2))
    cur = coeffs
    for deg in range(r, 0, -1):
        idx = index_of(deg)
        nxt = np.empty(coeffs.shape[:-1] + (dim(deg - 1),))
        for k, a in enumerate(multi_indices(deg - 1)):
            a0, a1, a2 = a
            nxt[..., k] = (lam[0] * cur[..., idx[(a0 + 1, a1, a2)]]
                           + lam[1] * cur[..., idx[(a0, a1 + 1, a2)]]
                           + lam[2] * cur[..., idx[(a0, a1, a2 + 1)]])
        cur = nxt
    return cur[..., 0]


def derivative_matrix(r: int, d: np.ndarray) -> np.ndarray:
    """Matrix of the directional derivative for barycentric direction ``d``.

    ``d[k]`` is the derivative of the k-th barycentric coordinate along the
    direction; the result maps degree ``r`` to degree ``r - 1`` coefficients.
    """
    if r <= 0:
        return np.zeros((1, dim(r)))
    out = np.zeros((dim(r - 1), dim(r)))
    hi = index_of(r)
    for k, b in enumerate(multi_indices(r - 1)):
        for c in range(3):
            a = list(b)
            a[c] += 1
            out[k, hi[tuple(a)]] += r * d[c]
    return out


@lru_cache(maxsize=None)
def elevation_matrix(r: int, k: int = 1) -> np.ndarray:
    """Degree elevation from ``r`` to ``r + k``."""
    out = np.eye(dim(r))
    for deg in range(r, r + k):
        e = np.zeros((dim(deg + 1), dim(deg)))
        lo = index_of(deg)
        for j, g in enumerate(multi_indices(deg + 1)):
            for c in range(3):
                if g[c] > 0:
                    a = list(g)
                    a[c] -= 1
                    e[j, lo[tuple(a)]] += g[c] / (deg + 1)
        out = e @ out
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def product_tensor(m: int, n: int) -> np.ndarray:
    """Tensor ``P`` with ``(a*b)_g = sum P[i, j, g] a_i b_j``."""
    out = np.zeros((dim(m), dim(n), dim(m + n)))
    idx = index_of(m + n)
    cm, cn, cmn = multinomial(m), multinomial(n), multinomial(m + n)
    for i, a in enumerate(multi_indices(m)):
        for j, b in enumerate(multi_indices(n)):
            g = idx[tuple(a + b)]
            out[i, j, g] = cm[i] * cn[j] / cmn[g]
    out.setflags(write=False)
    return out


def multiply(a: np.ndarray, b: np.ndarray, m: int, n: int) -> np.ndarray:
    return np.einsum("...i,...j,ijg->...g", a, b, product_tensor(m, n))


def integral_weights(r: int) -> np.ndarray:
    """Integrals of the Bernstein basis over a triangle of unit area."""
    return np.full(dim(r), 1.0 / comb(r + 2, 2))


# -- segments ---------------------------------------------------------------

def basis_1d(r: int, t: np.ndarray) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(r + 1)
    binom = np.array([comb(r, j) for j in k], dtype=float)
    return binom * t[:, None] ** k * (1 - t[:, None]) ** (r - k)
