"""Numerical tolerances shared across the package."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    # relative singular-value cutoff for rank decisions
    rank: float = 1e-9
    # relative singular values inside this open band are refused
    band: tuple[float, float] = (1e-11, 1e-7)
    residual: float = 1e-10
    geometry: float = 1e-12

    @classmethod
    def from_env(cls) -> "Tolerances":
        tol = cls()
        if "PSFEEC_TOL_RANK" in os.environ:
            rank = float(os.environ["PSFEEC_TOL_RANK"])
            tol = replace(tol, rank=rank, band=(rank * 1e-2, rank * 1e2))
        if "PSFEEC_TOL_RESIDUAL" in os.environ:
            tol = replace(tol, residual=float(os.environ["PSFEEC_TOL_RESIDUAL"]))
        return tol


TOL = Tolerances.from_env()


def set_tolerances(rank: float | None = None, residual: float | None = None) -> Tolerances:
    """Replace the shared tolerances; the refusal band follows the rank cutoff."""
    global TOL
    if rank is not None:
        TOL = replace(TOL, rank=rank, band=(rank * 1e-2, rank * 1e2))
    if residual is not None:
        TOL = replace(TOL, residual=residual)
    return TOL
