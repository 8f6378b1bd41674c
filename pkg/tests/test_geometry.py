from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, strategies as st

from homearena.geometry import (
    distance,
    is_simple_polygon,
    nearest_point_in_polygon,
    point_in_polygon,
    signed_area,
)
from helpers import winding_number_inside

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
L_SHAPE = [(0.0, 0.0), (3.0, 0.0), (3.0, 1.0), (1.0, 1.0), (1.0, 3.0), (0.0, 3.0)]

coords = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
points = st.tuples(coords, coords)


def test_distance_345():
    assert distance((0.0, 0.0), (3.0, 4.0)) == 5.0


def test_distance_identity():
    assert distance((2.5, -7.0), (2.5, -7.0)) == 0.0


def test_distance_translated_345():
    assert distance((-1.0, 0.0), (2.0, 4.0)) == 5.0


@given(points, points)
def test_distance_symmetric_nonnegative(a, b):
    assert distance(a, b) == distance(b, a) >= 0.0


@given(points, points, points)
def test_distance_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_unit_square_centroid_inside():
    assert point_in_polygon((0.5, 0.5), UNIT_SQUARE)


def test_unit_square_far_point_outside():
    assert not point_in_polygon((2.0, 2.0), UNIT_SQUARE)


def test_l_shape_membership():
    # frozen from a hand-run ray cast: one crossing for (1.5, 0.5), none for (2, 2)
    assert point_in_polygon((1.5, 0.5), L_SHAPE)
    assert not point_in_polygon((2.0, 2.0), L_SHAPE)


@pytest.mark.parametrize(
    "point",
    [(0.0, 0.0), (1.0, 1.0), (0.5, 0.0), (1.0, 0.25), (0.0, 0.75)],
)
def test_boundary_counts_as_inside(point):
    assert point_in_polygon(point, UNIT_SQUARE)


def _random_convex_polygon(rng: random.Random) -> list[tuple[float, float]]:
    cx, cy = rng.uniform(-5, 5), rng.uniform(-5, 5)
    radius = rng.uniform(0.5, 4.0)
    count = rng.randint(3, 9)
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(count))
    poly = [(cx + radius * math.cos(a), cy + radius * math.sin(a)) for a in angles]
    if signed_area(poly) <= 0 or not is_simple_polygon(poly):
        return _random_convex_polygon(rng)
    return poly


def test_agrees_with_winding_oracle_on_random_convex_polygons():
    rng = random.Random(20260810)
    checked = 0
    while checked < 1000:
        poly = _random_convex_polygon(rng)
        p = (rng.uniform(-10, 10), rng.uniform(-10, 10))
        assert point_in_polygon(p, poly) == winding_number_inside(p, poly), (p, poly)
        checked += 1


def test_agrees_with_winding_oracle_on_l_shape():
    rng = random.Random(7)
    for _ in range(1000):
        p = (rng.uniform(-1, 4), rng.uniform(-1, 4))
        assert point_in_polygon(p, L_SHAPE) == winding_number_inside(p, L_SHAPE), p


def test_signed_area_orientation():
    assert signed_area(UNIT_SQUARE) == 1.0
    assert signed_area(list(reversed(UNIT_SQUARE))) == -1.0
    assert signed_area(L_SHAPE) == 5.0


def test_simple_polygon_detection():
    assert is_simple_polygon(UNIT_SQUARE)
    assert is_simple_polygon(L_SHAPE)
    bowtie = [(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.0)]
    assert not is_simple_polygon(bowtie)
    assert not is_simple_polygon([(0.0, 0.0), (1.0, 0.0)])
    assert not is_simple_polygon([(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)])


def test_nearest_point_inside_is_identity():
    assert nearest_point_in_polygon((0.25, 0.75), UNIT_SQUARE) == (0.25, 0.75)


def test_nearest_point_projects_to_edge():
    assert nearest_point_in_polygon((0.5, 2.0), UNIT_SQUARE) == (0.5, 1.0)
    assert nearest_point_in_polygon((3.0, 0.5), UNIT_SQUARE) == (1.0, 0.5)


def test_nearest_point_snaps_to_corner():
    spot = nearest_point_in_polygon((2.0, 2.0), UNIT_SQUARE)
    assert spot == (1.0, 1.0)


@given(points)
def test_nearest_point_is_member_of_polygon(p):
    spot = nearest_point_in_polygon(p, UNIT_SQUARE)
    assert point_in_polygon(spot, UNIT_SQUARE)
