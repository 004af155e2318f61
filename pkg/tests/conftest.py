"""Shared fixtures and small mesh builders."""

import numpy as np
import pytest

from hatfem import Mesh, conforming_delaunay, square_domain


def right_triangle_mesh():
    """Single unit right triangle with legs on the axes."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return Mesh(verts, np.array([[0, 1, 2]]))


def two_triangle_square():
    """Unit square split along the main diagonal, with domain metadata."""
    dom = square_domain()
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    flags = np.full(4, -1, dtype=np.int32)
    return Mesh(verts, tris, boundary_flag=flags, domain=dom)


def random_square_mesh(seed, n_interior=30):
    """Conforming Delaunay mesh of the unit square with random interior."""
    dom = square_domain()
    rng = np.random.default_rng(seed)
    interior = 0.05 + 0.9 * rng.random((n_interior, 2))
    k = 4
    side = np.linspace(0.0, 1.0, k + 1)[:-1]
    boundary = np.concatenate([
        np.column_stack([side, np.zeros(k)]),
        np.column_stack([np.ones(k), side]),
        np.column_stack([1.0 - side, np.ones(k)]),
        np.column_stack([np.zeros(k), 1.0 - side]),
    ])
    return conforming_delaunay(dom, interior, boundary)


@pytest.fixture
def square_mesh():
    return random_square_mesh(0)
