"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

coord = st.floats(-5.0, 5.0, allow_nan=False)


@st.composite
def nonzero_vectors(draw, min_norm=1e-2):
    v = np.array([draw(coord), draw(coord), draw(coord)])
    if np.linalg.norm(v) < min_norm:
        v = v + np.array([min_norm, 0.0, 0.0]) * 2
    return v


@st.composite
def strengths_for(draw, arity):
    return np.array([draw(st.floats(-1.0, 1.0)) for _ in range(arity)])
