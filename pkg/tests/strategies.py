"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from psfeec.mesh import MacroSplit, min_angle, signed_area

coord = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


@st.composite
def triangles(draw, min_degrees=15.0):
    verts = np.array([[draw(coord), draw(coord)] for _ in range(3)])
    if signed_area(verts) < 0:
        verts = verts[[0, 2, 1]]
    from hypothesis import assume
    assume(abs(signed_area(verts)) > 1e-2)
    assume(min_angle(verts) > np.radians(min_degrees))
    return verts


@st.composite
def splits(draw):
    return MacroSplit.from_triangle(*draw(triangles()))


seeds = st.integers(0, 2**32 - 1)
