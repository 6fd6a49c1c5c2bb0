"""Quadrature on triangles and segments.

Triangle rules are collapsed Gauss-Jacobi products, available at any
exactness degree up to ``MAX_DEGREE``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 60


class QuadratureDegreeError(ValueError):
    pass


@lru_cache(maxsize=None)
def reference_triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Points (as barycentric triples) and weights on the unit-area triangle."""
    if degree < 0 or degree > MAX_DEGREE:
        raise QuadratureDegreeError(f"no triangle rule of exactness {degree}")
    n = max(1, (degree + 2) // 2)
    xa, wa = roots_jacobi(n, 1.0, 0.0)
    xb, wb = np.polynomial.legendre.leggauss(n)
    a = (xa + 1) / 2
    b = (xb + 1) / 2
    wa = wa / 4  # (1-x)/2 factor and dx/2
    wb = wb / 2
    A, B = np.meshgrid(a, b, indexing="ij")
    W = np.outer(wa, wb)
    # Duffy map: lambda1 = a, lambda2 = (1 - a) b on reference area 1/2
    l1 = A.ravel()
    l2 = ((1 - A) * B).ravel()
    lam = np.column_stack([1 - l1 - l2, l1, l2])
    w = 2.0 * W.ravel()  # normalise to unit area
    lam.setflags(write=False)
    w.setflags(write=False)
    return lam, w


def triangle_rule(tri: np.ndarray, degree: int):
    """Cartesian points, weights and barycentric coordinates for ``tri``."""
    lam, w = reference_triangle_rule(degree)
    tri = np.asarray(tri, dtype=float)
    (x0, y0), (x1, y1), (x2, y2) = tri
    area = abs(0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)))
    return lam @ tri, w * area, lam


@lru_cache(maxsize=None)
def gauss_legendre01(degree: int) -> tuple[np.ndarray, np.ndarray]:
    if degree < 0 or degree > MAX_DEGREE:
        raise QuadratureDegreeError(f"no segment rule of exactness {degree}")
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    t, w = (x + 1) / 2, w / 2
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def segment_rule(a: np.ndarray, b: np.ndarray, degree: int):
    """Points, arc-length weights and parameters on the segment ``[a, b]``."""
    t, w = gauss_legendre01(degree)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.linalg.norm(b - a))
    return a[None, :] + t[:, None] * (b - a)[None, :], w * length, t
