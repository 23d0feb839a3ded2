import numpy as np
import pytest
from hypothesis import strategies as st

from relaxproj.geometry import Ball, Box, HalfSpace, Hyperplane, Simplex

coord = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def vectors(d):
    return st.lists(coord, min_size=d, max_size=d).map(np.array)


@st.composite
def convex_sets(draw, d=2):
    kind = draw(st.sampled_from(["halfspace", "hyperplane", "ball", "box", "simplex"]))
    if kind in ("halfspace", "hyperplane"):
        a = draw(vectors(d).filter(lambda v: np.linalg.norm(v) > 1e-2))
        b = draw(coord)
        return HalfSpace(a, b) if kind == "halfspace" else Hyperplane(a, b)
    if kind == "ball":
        return Ball(draw(vectors(d)), draw(st.floats(min_value=0.01, max_value=10)))
    if kind == "box":
        lo = draw(vectors(d))
        width = np.array(draw(st.lists(st.floats(min_value=0, max_value=5), min_size=d, max_size=d)))
        return Box(lo, lo + width)
    return Simplex()


@pytest.fixture
def two_halfplanes():
    """{x <= 0} and {y <= 0} in the plane."""
    return [HalfSpace([1.0, 0.0], 0.0), HalfSpace([0.0, 1.0], 0.0)]


@pytest.fixture
def ray_sets():
    """Two copies of {t <= 0} on the real line."""
    return [HalfSpace([1.0], 0.0), HalfSpace([1.0], 0.0)]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
