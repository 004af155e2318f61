"""Predicates and polygonal domain bookkeeping."""

import numpy as np
import pytest

from hatfem.geometry import (
    CORNER,
    INTERIOR,
    PolygonDomain,
    incircle,
    orient2d,
    point_segment_distance,
    signed_loop_area,
    square_domain,
)

A = np.array([0.0, 0.0])
B = np.array([1.0, 0.0])
C = np.array([0.0, 1.0])


def test_orient2d_signs():
    assert orient2d(A, B, C) == 1
    assert orient2d(A, C, B) == -1
    assert orient2d(A, B, np.array([2.0, 0.0])) == 0


def test_incircle_signs():
    # circumcircle of the unit right triangle passes through (1, 1)
    inside = np.array([0.4, 0.4])
    outside = np.array([2.0, 2.0])
    cocircular = np.array([1.0, 1.0])
    assert incircle(A, B, np.array([1.0, 1.0]), inside) > 0
    assert incircle(A, B, np.array([1.0, 1.0]), outside) < 0
    assert incircle(A, B, cocircular, C) == 0


def test_signed_loop_area():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert signed_loop_area(square) == pytest.approx(1.0)
    assert signed_loop_area(square[::-1]) == pytest.approx(-1.0)


def test_point_segment_distance():
    pts = np.array([[0.5, 1.0], [-1.0, 0.0], [2.0, 0.0], [0.25, 0.0]])
    d = point_segment_distance(pts, A, B)
    np.testing.assert_allclose(d, [1.0, 1.0, 1.0, 0.0], atol=1e-15)


def test_square_domain_metadata():
    dom = square_domain()
    assert dom.num_segments == 4
    assert dom.area == pytest.approx(1.0)
    assert dom.extent == pytest.approx(1.0)
    assert dom.perimeter == pytest.approx(4.0)


def test_contains_points():
    dom = square_domain()
    pts = np.array([[0.5, 0.5], [1.5, 0.5], [-0.1, 0.2]])
    np.testing.assert_array_equal(
        dom.contains_points(pts), [True, False, False]
    )


def test_classify_points():
    dom = square_domain()
    pts = np.array([
        [0.0, 0.0],   # corner
        [0.5, 0.0],   # bottom edge, segment 1
        [1.0, 0.3],   # right edge, segment 2
        [0.5, 0.5],   # interior
    ])
    flags = dom.classify_points(pts)
    assert flags[0] == CORNER
    assert flags[1] == 1
    assert flags[2] == 2
    assert flags[3] == INTERIOR


def test_segment_points_roundtrip():
    dom = square_domain()
    a, b = dom.segment_points(1)
    np.testing.assert_allclose(a, [0.0, 0.0])
    np.testing.assert_allclose(b, [1.0, 0.0])


def test_invalid_loops_rejected():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        PolygonDomain(square[::-1])  # clockwise outer loop
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        PolygonDomain(bowtie)


def test_lshape_domain():
    outer = np.array([
        [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0],
        [-1.0, -1.0], [0.0, -1.0], [0.0, 0.0],
    ])
    dom = PolygonDomain(outer)
    assert dom.area == pytest.approx(3.0)
    pts = np.array([[0.5, 0.5], [0.5, -0.5], [-0.5, -0.5]])
    np.testing.assert_array_equal(
        dom.contains_points(pts), [True, False, True]
    )
    # the reentrant corner is a corner like any other
    assert dom.classify_points(np.array([[0.0, 0.0]]))[0] == CORNER


def test_distance_to_boundary():
    dom = square_domain()
    d = dom.distance_to_boundary(np.array([[0.5, 0.5], [0.1, 0.5]]))
    np.testing.assert_allclose(d, [0.5, 0.1], atol=1e-15)
