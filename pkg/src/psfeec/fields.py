"""Closed-form smooth fields used as projection inputs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

X, Y = sp.symbols("x y", real=True)


def _lambdify(expr):
    f = sp.lambdify((X, Y), expr, "numpy")

    def call(x, y):
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), np.shape(x)).copy()

    return call


@dataclass(frozen=True)
class SmoothField:
    """Scalar or vector field given by sympy expressions in ``x, y``."""

    exprs: tuple
    _value: list = field(init=False, repr=False, compare=False)
    _grad: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        exprs = tuple(sp.sympify(e) for e in self.exprs)
        object.__setattr__(self, "exprs", exprs)
        object.__setattr__(self, "_value", [_lambdify(e) for e in exprs])
        object.__setattr__(self, "_grad", [(_lambdify(sp.diff(e, X)), _lambdify(sp.diff(e, Y)))
                                           for e in exprs])

    @classmethod
    def scalar(cls, expr) -> "SmoothField":
        return cls((expr,))

    @classmethod
    def vector(cls, ex, ey) -> "SmoothField":
        return cls((ex, ey))

    @property
    def ncomp(self) -> int:
        return len(self.exprs)

    def jet(self, x: np.ndarray, subs=None) -> np.ndarray:
        """Value and gradient at points, shape (N, ncomp, 3)."""
        x = np.atleast_2d(x)
        out = np.empty((len(x), self.ncomp, 3))
        for c in range(self.ncomp):
            out[:, c, 0] = self._value[c](x[:, 0], x[:, 1])
            out[:, c, 1] = self._grad[c][0](x[:, 0], x[:, 1])
            out[:, c, 2] = self._grad[c][1](x[:, 0], x[:, 1])
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.jet(x)[:, :, 0]

    def rot(self) -> "SmoothField":
        if self.ncomp == 1:
            q = self.exprs[0]
            return SmoothField((sp.diff(q, Y), -sp.diff(q, X)))
        v = self.exprs
        return SmoothField((sp.diff(v[1], X) - sp.diff(v[0], Y),))

    def div(self) -> "SmoothField":
        if self.ncomp != 2:
            raise ValueError("divergence needs a vector field")
        return SmoothField((sp.diff(self.exprs[0], X) + sp.diff(self.exprs[1], Y),))

    def grad(self) -> "SmoothField":
        if self.ncomp != 1:
            raise ValueError("gradient needs a scalar field")
        return SmoothField((sp.diff(self.exprs[0], X), sp.diff(self.exprs[0], Y)))

    def laplacian(self) -> "SmoothField":
        return SmoothField(tuple(sp.diff(e, X, 2) + sp.diff(e, Y, 2) for e in self.exprs))

    def __add__(self, other: "SmoothField") -> "SmoothField":
        return SmoothField(tuple(a + b for a, b in zip(self.exprs, other.exprs)))

    def __sub__(self, other: "SmoothField") -> "SmoothField":
        return SmoothField(tuple(a - b for a, b in zip(self.exprs, other.exprs)))

    def scale(self, c) -> "SmoothField":
        return SmoothField(tuple(c * e for e in self.exprs))


def random_smooth_field(rng: np.random.Generator, ncomp: int = 1, degree: int = 3,
                        waves: int = 2, frequency: float = 1.5) -> SmoothField:
    """Random polynomial plus a few plane waves and an exponential."""
    exprs = []
    for _ in range(ncomp):
        e = 0
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                e += round(float(rng.standard_normal()), 6) * X**i * Y**j
        for _ in range(waves):
            kx, ky, ph = (round(float(v), 6) for v in rng.uniform(-frequency, frequency, 3))
            e += round(float(rng.standard_normal()), 6) * sp.sin(kx * X + ky * Y + ph)
        a, b = (round(float(v), 6) for v in rng.uniform(-0.5, 0.5, 2))
        e += sp.exp(a * X + b * Y)
        exprs.append(e)
    return SmoothField(tuple(exprs))


@dataclass(frozen=True)
class PiecewiseSum:
    """Piecewise polynomial on a split plus a smooth field.

    Evaluation needs the subtriangle of every point, so it can represent
    inputs that are discontinuous across interior edges.
    """

    pieces: object           # PiecewisePolynomial on the split
    smooth: SmoothField | None = None

    @property
    def ncomp(self) -> int:
        return self.pieces.ncomp

    def jet(self, x: np.ndarray, subs: np.ndarray) -> np.ndarray:
        from .poly import jet_rows

        x = np.atleast_2d(x)
        out = np.zeros((len(x), self.ncomp, 3))
        vec = self.pieces.vector
        for s in np.unique(subs):
            idx = np.nonzero(subs == s)[0]
            out[idx] = jet_rows(self.pieces.tris, self.pieces.degree, self.ncomp, int(s), x[idx]) @ vec
        if self.smooth is not None:
            out += self.smooth.jet(x)
        return out


@dataclass(frozen=True)
class WaveField:
    """Numeric random field: polynomial plus plane waves plus an exponential.

    ``terms`` lists, per output component, ``(coef, base_comp, i, j)``
    meaning ``coef * d^i/dx^i d^j/dy^j`` of a base component.  Cheaper
    than :class:`SmoothField` when many random inputs are needed.
    """

    poly: np.ndarray        # (nbase, d+1, d+1) monomial coefficients
    waves: np.ndarray       # (nbase, W, 4): amplitude, kx, ky, phase
    expo: np.ndarray        # (nbase, 2)
    terms: tuple

    @property
    def ncomp(self) -> int:
        return len(self.terms)

    def derivative(self, x: np.ndarray, c: int, i: int, j: int) -> np.ndarray:
        px, py = x[:, 0], x[:, 1]
        out = np.zeros(len(x))
        d = self.poly.shape[1] - 1
        for a in range(i, d + 1):
            for b in range(j, d + 1 - a):
                coef = self.poly[c, a, b]
                if coef:
                    fa = np.prod(np.arange(a - i + 1, a + 1)) if i else 1
                    fb = np.prod(np.arange(b - j + 1, b + 1)) if j else 1
                    out += coef * fa * fb * px ** (a - i) * py ** (b - j)
        for amp, kx, ky, ph in self.waves[c]:
            out += amp * kx**i * ky**j * np.sin(kx * px + ky * py + ph + (i + j) * np.pi / 2)
        ea, eb = self.expo[c]
        out += ea**i * eb**j * np.exp(ea * px + eb * py)
        return out

    def jet(self, x: np.ndarray, subs=None) -> np.ndarray:
        x = np.atleast_2d(x)
        out = np.zeros((len(x), self.ncomp, 3))
        for k, comp in enumerate(self.terms):
            for coef, c, i, j in comp:
                out[:, k, 0] += coef * self.derivative(x, c, i, j)
                out[:, k, 1] += coef * self.derivative(x, c, i + 1, j)
                out[:, k, 2] += coef * self.derivative(x, c, i, j + 1)
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.jet(x)[:, :, 0]

    def _apply(self, terms) -> "WaveField":
        return WaveField(self.poly, self.waves, self.expo, tuple(terms))

    def rot(self) -> "WaveField":
        if self.ncomp == 1:
            t = self.terms[0]
            return self._apply([[(a, c, i, j + 1) for a, c, i, j in t],
                                [(-a, c, i + 1, j) for a, c, i, j in t]])
        u, v = self.terms
        return self._apply([[(a, c, i + 1, j) for a, c, i, j in v] + [(-a, c, i, j + 1) for a, c, i, j in u]])

    def div(self) -> "WaveField":
        if self.ncomp != 2:
            raise ValueError("divergence needs a vector field")
        u, v = self.terms
        return self._apply([[(a, c, i + 1, j) for a, c, i, j in u] + [(a, c, i, j + 1) for a, c, i, j in v]])


def random_wave_field(rng: np.random.Generator, ncomp: int = 1, degree: int = 3,
                      waves: int = 2, frequency: float = 1.5) -> WaveField:
    poly = np.zeros((ncomp, degree + 1, degree + 1))
    for c in range(ncomp):
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                poly[c, a, b] = rng.standard_normal()
    w = np.zeros((ncomp, waves, 4))
    w[:, :, 0] = rng.standard_normal((ncomp, waves))
    w[:, :, 1:] = rng.uniform(-frequency, frequency, (ncomp, waves, 3))
    expo = rng.uniform(-0.5, 0.5, (ncomp, 2))
    terms = tuple(((1.0, c, 0, 0),) for c in range(ncomp))
    return WaveField(poly, w, expo, terms)
