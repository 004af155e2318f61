"""Conforming triangle meshes and their combinatorics."""

from dataclasses import dataclass, field

import numpy as np

from .geometry import CORNER, INTERIOR, PolygonDomain, point_segment_distance

BOUNDARY_TOL = 1e-9


class TopologyError(ValueError):
    """The triangle connectivity is not a conforming mesh."""


class DegenerateTriangleError(ValueError):
    """A triangle has non-positive area."""


class MeshMismatchError(ValueError):
    """Two objects that must share a mesh do not."""


def _as_vertex_array(vertices):
    v = np.ascontiguousarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2:
        raise ValueError("vertices must be an (N, 2) array")
    if not np.isfinite(v).all():
        raise ValueError("vertices contain non-finite coordinates")
    return v


class Mesh:
    """A conforming triangulation of a polygonal domain.

    Triangles are counterclockwise index triples into the vertex array.
    ``boundary_flag`` marks each vertex as interior (0), lying on a 1-based
    boundary segment, or a domain corner (-1).  ``refinement_edge`` stores,
    per triangle, the local index (edge k is opposite vertex k) of the edge
    the next bisection of that triangle splits.
    """

    def __init__(self, vertices, triangles, boundary_flag=None, domain=None,
                 refinement_edge=None, validate=True):
        self.vertices = _as_vertex_array(vertices)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.intp)
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be a (T, 3) array")
        n = len(self.vertices)
        if boundary_flag is None:
            boundary_flag = np.zeros(n, dtype=np.int32)
        self.boundary_flag = np.ascontiguousarray(boundary_flag, dtype=np.int32)
        if self.boundary_flag.shape != (n,):
            raise ValueError("boundary_flag must have one entry per vertex")
        self.domain = domain
        if refinement_edge is None:
            refinement_edge = self._longest_edge_locals()
        self.refinement_edge = np.ascontiguousarray(refinement_edge, dtype=np.int8)
        if self.refinement_edge.shape != (len(self.triangles),):
            raise ValueError("refinement_edge must have one entry per triangle")
        for arr in (self.vertices, self.triangles, self.boundary_flag,
                    self.refinement_edge):
            arr.flags.writeable = False
        self._edge_table = None
        self._vertex_tris = None
        self._trifinder = None
        if validate:
            self.validate()

    # -- basic quantities ------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def corner_points(self):
        return self.vertices[self.triangles]  # (T, 3, 2)

    def signed_areas(self):
        p = self.corner_points()
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def areas(self):
        return self.signed_areas()

    def centroids(self):
        return self.corner_points().mean(axis=1)

    def edge_length_squares(self):
        """Squared lengths of the three local edges (edge k opposite vertex k)."""
        p = self.corner_points()
        out = np.empty((self.num_triangles, 3))
        for k in range(3):
            d = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
            out[:, k] = d[:, 0] ** 2 + d[:, 1] ** 2
        return out

    def diameters(self):
        return np.sqrt(self.edge_length_squares().max(axis=1))

    def _longest_edge_locals(self):
        p = self.vertices[self.triangles]
        lsq = np.empty((len(self.triangles), 3))
        for k in range(3):
            d = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
            lsq[:, k] = d[:, 0] ** 2 + d[:, 1] ** 2
        return lsq.argmax(axis=1).astype(np.int8)

    # -- cached combinatorics ---------------------------------------------

    def edge_table(self):
        if self._edge_table is None:
            self._edge_table = build_edge_table(self)
        return self._edge_table

    def vertex_triangles(self):
        """List of incident-triangle index arrays, one per vertex."""
        if self._vertex_tris is None:
            order = np.argsort(self.triangles.ravel(), kind="stable")
            tri_of = order // 3
            counts = np.bincount(self.triangles.ravel(),
                                 minlength=self.num_vertices)
            splits = np.cumsum(counts)[:-1]
            self._vertex_tris = np.split(tri_of, splits)
        return self._vertex_tris

    def trifinder(self):
        """Cached matplotlib trapezoid-map point locator for this mesh."""
        if self._trifinder is None:
            from matplotlib.tri import Triangulation

            self._trifinder = Triangulation(
                self.vertices[:, 0], self.vertices[:, 1], self.triangles
            ).get_trifinder()
        return self._trifinder

    # -- validation --------------------------------------------------------

    def validate(self):
        t = self.triangles
        if t.size and (t.min() < 0 or t.max() >= self.num_vertices):
            raise TopologyError("triangle refers to a missing vertex")
        areas = self.signed_areas()
        if (areas <= 0).any():
            bad = int(np.argmax(areas <= 0))
            raise DegenerateTriangleError(
                f"triangle {bad} has non-positive area {areas[bad]:.3e}"
            )
        used = np.zeros(self.num_vertices, dtype=bool)
        used[t.ravel()] = True
        if not used.all():
            raise TopologyError(
                f"vertex {int(np.argmin(used))} belongs to no triangle"
            )
        table = build_edge_table(self)
        if self.domain is not None:
            self._validate_boundary(table)

    def _validate_boundary(self, table):
        dom = self.domain
        bedges = table.edges[table.is_boundary]
        mids = 0.5 * (self.vertices[bedges[:, 0]] + self.vertices[bedges[:, 1]])
        scale = max(dom.extent, 1.0)
        for pts, what in ((self.vertices[bedges.ravel()], "endpoint"),
                          (mids, "midpoint")):
            if len(pts) and dom.distance_to_boundary(pts).max() > BOUNDARY_TOL * scale:
                raise TopologyError(
                    f"a boundary edge {what} is off the domain boundary"
                )
        # every domain segment must be tiled by boundary edges
        seg_len = np.linalg.norm(dom.segment_ends - dom.segment_starts, axis=1)
        covered = np.zeros(dom.num_segments)
        if len(bedges):
            elen = np.linalg.norm(
                self.vertices[bedges[:, 1]] - self.vertices[bedges[:, 0]], axis=1
            )
            for sid in range(1, dom.num_segments + 1):
                a, b = dom.segment_points(sid)
                on = point_segment_distance(mids, a, b) <= BOUNDARY_TOL * scale
                covered[sid - 1] = elen[on].sum()
        if not np.allclose(covered, seg_len, rtol=1e-9, atol=1e-9 * scale):
            sid = int(np.argmax(np.abs(covered - seg_len))) + 1
            raise TopologyError(
                f"domain boundary segment {sid} is not tiled by boundary edges"
            )
        flagged = self.boundary_flag != INTERIOR
        incident = np.zeros(self.num_vertices, dtype=bool)
        if len(bedges):
            incident[bedges.ravel()] = True
        if (incident != flagged).any():
            raise TopologyError("boundary flags disagree with boundary edges")


@dataclass
class EdgeTable:
    """Unique undirected edges of a mesh with incidences and geometry.

    Edges are stored lower vertex index first and ordered lexicographically.
    ``tri_plus``/``tri_minus`` are the incident triangles (ascending index;
    ``tri_minus`` is -1 on boundary edges).  Normals point from the lower to
    the higher vertex rotated a quarter turn counterclockwise, so they are a
    function of vertex order only.
    """

    edges: np.ndarray
    tri_plus: np.ndarray
    tri_minus: np.ndarray
    tri_edges: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray
    midpoints: np.ndarray
    is_boundary: np.ndarray = field(repr=False, default=None)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_interior(self):
        return int((~self.is_boundary).sum())


def build_edge_table(mesh):
    """Extract the edge table of a mesh.

    Raises TopologyError when some edge has more than two incident triangles.
    """
    t = mesh.triangles
    raw = np.concatenate(
        [t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=0
    )  # local edge k of triangle j at row k*T + j
    raw.sort(axis=1)
    edges, inverse = np.unique(raw, axis=0, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(edges))
    if (counts > 2).any():
        bad = edges[int(np.argmax(counts > 2))]
        raise TopologyError(
            f"edge ({bad[0]}, {bad[1]}) has more than two incident triangles"
        )
    ntri = len(t)
    tri_edges = inverse.reshape(3, ntri).T.copy()
    tri_plus = np.full(len(edges), -1, dtype=np.intp)
    tri_minus = np.full(len(edges), -1, dtype=np.intp)
    tri_of_row = np.tile(np.arange(ntri, dtype=np.intp), 3)
    order = np.lexsort((tri_of_row, inverse))
    sorted_edges = inverse[order]
    sorted_tris = tri_of_row[order]
    first = np.searchsorted(sorted_edges, np.arange(len(edges)), side="left")
    tri_plus[:] = sorted_tris[first]
    second = counts == 2
    tri_minus[second] = sorted_tris[first[second] + 1]
    p0 = mesh.vertices[edges[:, 0]]
    p1 = mesh.vertices[edges[:, 1]]
    d = p1 - p0
    lengths = np.linalg.norm(d, axis=1)
    if (lengths == 0).any():
        raise DegenerateTriangleError("zero-length edge")
    tangents = d / lengths[:, None]
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    return EdgeTable(
        edges=edges,
        tri_plus=tri_plus,
        tri_minus=tri_minus,
        tri_edges=tri_edges,
        normals=normals,
        lengths=lengths,
        midpoints=0.5 * (p0 + p1),
        is_boundary=counts == 1,
    )


def triangle_quality(mesh):
    """Per-triangle shape quality 4*sqrt(3)*area / sum of squared edge lengths.

    Equals 1 for equilateral triangles and tends to 0 as a triangle
    degenerates.
    """
    areas = mesh.signed_areas()
    if (areas <= 0).any():
        raise DegenerateTriangleError("quality undefined for non-positive area")
    return 4.0 * np.sqrt(3.0) * areas / mesh.edge_length_squares().sum(axis=1)


def min_angle(mesh):
    """Smallest interior angle over all triangles, in radians."""
    p = mesh.corner_points()
    angles = np.empty((mesh.num_triangles, 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = (u * v).sum(axis=1)
        angles[:, k] = np.arctan2(np.abs(cross), dot)
    return float(angles.min())


def locate_points(mesh, points, tol=1e-9):
    """Containing triangle of each query point, with a tolerant rescue pass.

    Points that fall a hair outside the triangulation (within ``tol`` of it,
    scaled by the mesh extent) are attributed to the nearest triangle of the
    nearest vertex.  Returns (triangle indices, barycentric coordinates);
    points that cannot be located raise ContainmentError.
    """
    from .geometry import ContainmentError

    points = np.atleast_2d(np.asarray(points, dtype=float))
    finder = mesh.trifinder()
    tri = np.asarray(finder(points[:, 0], points[:, 1]), dtype=np.intp)
    lost = np.flatnonzero(tri < 0)
    if len(lost):
        from scipy.spatial import cKDTree

        scale = max(float(np.ptp(mesh.vertices, axis=0).max()), 1.0)
        _, nearest = cKDTree(mesh.vertices).query(points[lost])
        v2t = mesh.vertex_triangles()
        for row, vid in zip(lost, nearest):
            best_t, best_b = -1, -np.inf
            for cand in v2t[vid]:
                b = _barycentric(mesh, int(cand), points[row])
                if b.min() > best_b:
                    best_b, best_t = b.min(), int(cand)
            if best_b < -tol * scale:
                raise ContainmentError(
                    f"point {points[row]} lies outside the triangulation"
                )
            tri[row] = best_t
    corners = mesh.vertices[mesh.triangles[tri]]  # (n, 3, 2)
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    rhs = points - corners[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    l1 = (rhs[:, 0] * e2[:, 1] - rhs[:, 1] * e2[:, 0]) / det
    l2 = (e1[:, 0] * rhs[:, 1] - e1[:, 1] * rhs[:, 0]) / det
    bary = np.column_stack([1.0 - l1 - l2, l1, l2])
    np.clip(bary, 0.0, None, out=bary)
    bary /= bary.sum(axis=1, keepdims=True)
    return tri, bary


def _barycentric(mesh, tri_index, point):
    a, b, c = mesh.vertices[mesh.triangles[tri_index]]
    m = np.array([b - a, c - a]).T
    lam = np.linalg.solve(m, point - a)
    return np.array([1.0 - lam.sum(), lam[0], lam[1]])
