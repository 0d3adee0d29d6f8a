"""Shared hypothesis strategies: interior ball points and directions."""
import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

coord = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def ball_points(draw, n=3, max_radius=0.85):
    v = draw(arrays(float, n, elements=coord))
    r = draw(st.floats(0.0, max_radius))
    nrm = np.linalg.norm(v)
    if nrm < 1e-6:
        return np.zeros(n)
    return r * v / nrm


@st.composite
def unit_vectors(draw, n=3):
    v = draw(arrays(float, n, elements=coord))
    nrm = np.linalg.norm(v)
    if nrm < 1e-3:
        v = np.eye(n)[0]
        nrm = 1.0
    return v / nrm
