"""Rank-revealing helpers built on the SVD."""

from __future__ import annotations

import logging

import numpy as np

from . import config

log = logging.getLogger(__name__)


class RankAmbiguityError(RuntimeError):
    """A singular value fell inside the forbidden band around the cutoff."""


def _check_band(s: np.ndarray, what: str, band) -> None:
    if s.size == 0 or s[0] == 0.0:
        return
    rel = s / s[0]
    bad = (rel > band[0]) & (rel < band[1])
    if np.any(bad):
        raise RankAmbiguityError(
            f"{what}: relative singular values {rel[bad]} inside ambiguity band {band}"
        )


def numerical_rank(a: np.ndarray, rtol: float | None = None, what: str = "matrix",
                   band=None) -> int:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0
    rtol = config.TOL.rank if rtol is None else rtol
    band = config.TOL.band if band is None else band
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    _check_band(s, what, band)
    rank = int(np.sum(s > rtol * s[0]))
    log.debug("rank(%s) = %d of %s", what, rank, a.shape)
    return rank


def nullspace(a: np.ndarray, n: int | None = None, rtol: float | None = None,
              what: str = "constraints", band=None) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a``.

    Rows of ``a`` are normalised before the SVD so that value and derivative
    constraints carry equal weight.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a matrix")
    if a.shape[0] == 0:
        return np.eye(a.shape[1] if n is None else n)
    norms = np.linalg.norm(a, axis=1)
    a = a[norms > 0] / norms[norms > 0, None]
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    rtol = config.TOL.rank if rtol is None else rtol
    band = config.TOL.band if band is None else band
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    _check_band(s, what, band)
    rank = int(np.sum(s > rtol * s[0]))
    log.debug("nullspace(%s): rank %d, nullity %d", what, rank, a.shape[1] - rank)
    return vt[rank:].T.copy()


def orthonormal_range(a: np.ndarray, rtol: float | None = None,
                      what: str = "range") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[1] == 0:
        return a[:, :0]
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return a[:, :0]
    rtol = config.TOL.rank if rtol is None else rtol
    _check_band(s, what, config.TOL.band)
    return u[:, : int(np.sum(s > rtol * s[0]))]


def singular_values(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)
