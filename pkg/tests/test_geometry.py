import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from relaxproj.diagnostics import brute_force_project
from relaxproj.errors import InputError
from relaxproj.geometry import (
    Ball,
    Box,
    HalfSpace,
    Hyperplane,
    Simplex,
    contains,
    distance,
    project,
    set_from_json,
    set_to_json,
)

from conftest import convex_sets, vectors


def test_project_point_already_in_halfspace():
    assert_allclose(project(HalfSpace([1, 0], 0), [-1, 5]), [-1, 5])


def test_project_ball_radial():
    p = project(Ball([0, 0], 1), [3, 4])
    assert_allclose(p, [0.6, 0.8], atol=1e-15)
    assert_allclose(brute_force_project(Ball([0, 0], 1), [3, 4]), p, atol=1e-6)


def test_project_simplex_shift():
    p = project(Simplex(), [0.3, 0.2])
    assert_allclose(p, [0.55, 0.45], atol=1e-15)
    assert_allclose(brute_force_project(Simplex(), [0.3, 0.2]), p, atol=1e-6)


def test_project_simplex_clips_negative():
    assert_allclose(project(Simplex(), [2.0, -1.0, 0.0]), [1.0, 0.0, 0.0])


def test_project_box_and_hyperplane():
    assert_allclose(project(Box([0, 0], [1, 1]), [2, -1]), [1, 0])
    assert_allclose(project(Hyperplane([1, 1], 0), [1, 1]), [0, 0])


def test_degenerate_box_clamps_coordinate():
    box = Box([0, 2], [1, 2])
    assert_allclose(project(box, [5, -3]), [1, 2])


@pytest.mark.parametrize(
    "cset, x, expected",
    [
        (HalfSpace([1, 0], 0), [2, 3], 2.0),
        (Ball([0, 0], 1), [3, 4], 4.0),
        (Box([0, 0], [1, 1]), [0.5, 0.5], 0.0),
        (Hyperplane([3, 4], 0), [3, 4], 5.0),
    ],
)
def test_distance(cset, x, expected):
    assert distance(cset, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "cset, x, tol, expected",
    [
        (Box([0, 0], [1, 1]), [0.5, 0.5], 0.0, True),
        (Hyperplane([1, 0], 0), [1e-13, 1], 1e-12, True),
        (HalfSpace([1, 0], 0), [0.1, 0], 1e-12, False),
        (Simplex(), [0.5, 0.5], 0.0, True),
        (Simplex(), [0.5, 0.6], 1e-12, False),
        (Ball([0, 0], 1), [1, 0], 0.0, True),
    ],
)
def test_contains(cset, x, tol, expected):
    assert contains(cset, x, tol) is expected


def test_contains_rejects_negative_tol():
    with pytest.raises(InputError):
        contains(Ball([0], 1), [0], -1.0)


@pytest.mark.parametrize(
    "cset",
    [HalfSpace([1, 0], 0), Hyperplane([1, 0], 0), Ball([0, 0], 1), Box([0, 0], [1, 1])],
)
def test_dimension_mismatch(cset):
    for fn in (project, distance):
        with pytest.raises(InputError, match="dimension"):
            fn(cset, [1.0, 2.0, 3.0])


@pytest.mark.parametrize(
    "make",
    [
        lambda: HalfSpace([0, 0], 1),
        lambda: Hyperplane([0, 0], 1),
        lambda: Ball([0, 0], 0),
        lambda: Box([1, 0], [0, 1]),
        lambda: Ball([np.nan, 0], 1),
    ],
)
def test_invalid_sets_rejected(make):
    with pytest.raises(InputError):
        make()


def test_json_roundtrip():
    sets = [HalfSpace([1, 2], 3), Hyperplane([0, 1], -1), Ball([1, 1], 2), Box([0, 0], [1, 2]), Simplex()]
    for cset in sets:
        back = set_from_json(set_to_json(cset))
        assert set_to_json(back) == set_to_json(cset)
    assert set_to_json(sets[0]) == {"type": "halfspace", "a": [1.0, 2.0], "b": 3.0}


@pytest.mark.parametrize(
    "obj, match",
    [
        ({"type": "ball", "center": [0, 0]}, "radius"),
        ({"type": "cone"}, "unknown set type"),
        ({"type": "box", "lo": [1], "hi": [0]}, "lo <= hi"),
    ],
)
def test_json_errors_name_field(obj, match):
    with pytest.raises(InputError, match=match):
        set_from_json(obj, "sets[1]")


@settings(max_examples=200, deadline=None)
@given(convex_sets(), vectors(2))
def test_projection_lands_in_set_and_is_idempotent(cset, x):
    p = project(cset, x)
    assert contains(cset, p, 1e-12)
    assert_allclose(project(cset, p), p, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(convex_sets(), vectors(2), vectors(2))
def test_firm_nonexpansive(cset, x, y):
    px, py = project(cset, x), project(cset, y)
    assert (px - py) @ (px - py) <= (px - py) @ (x - y) + 1e-10


@settings(max_examples=200, deadline=None)
@given(convex_sets(), vectors(2), st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_variational_inequality(cset, x, w):
    # z: a point of the set obtained by projecting a second point
    z = project(cset, x + 5 * np.array(w) - 2.5)
    px = project(cset, x)
    assert (z - px) @ (x - px) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(convex_sets(), vectors(2))
def test_distance_zero_iff_contained(cset, x):
    d = distance(cset, x)
    assert d >= 0
    p = project(cset, x)
    assert distance(cset, p) <= 1e-12
    if d > 1e-9:
        assert not contains(cset, x, 0.0)
