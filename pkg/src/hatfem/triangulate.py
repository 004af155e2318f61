"""Delaunay triangulation of points and of polygonal domains."""

import numpy as np
import scipy.spatial

from .geometry import INTERIOR, ContainmentError, incircle, orient2d
from .mesh import Mesh

DUPLICATE_TOL = 1e-12
COCIRCULAR_TOL = 1e-10


class DuplicatePointsError(ValueError):
    """Two input points coincide within tolerance."""


class CollinearPointsError(ValueError):
    """All input points lie on one line; no triangulation exists."""


class BoundaryRecoveryError(ValueError):
    """A domain boundary segment cannot be recovered from the samples."""


def _check_points(pts):
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if not np.isfinite(pts).all():
        raise ValueError("points contain non-finite coordinates")
    pairs = scipy.spatial.cKDTree(pts).query_pairs(DUPLICATE_TOL)
    if pairs:
        i, j = sorted(min(pairs))
        raise DuplicatePointsError(
            f"points {i} and {j} coincide within {DUPLICATE_TOL:g}"
        )
    d = pts - pts[0]
    spread = np.abs(d).max()
    ref = d[np.argmax((d ** 2).sum(axis=1))]
    cross = np.abs(d[:, 0] * ref[1] - d[:, 1] * ref[0])
    if spread == 0 or cross.max() <= 1e-14 * spread * spread:
        raise CollinearPointsError("input points are collinear")


def _orient_ccw(pts, tris):
    p = pts[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _canonical_order(tris):
    roll = tris.argmin(axis=1)
    out = tris.copy()
    for r in (1, 2):
        rows = roll == r
        out[rows] = np.roll(tris[rows], -r, axis=1)
    return out[np.lexsort((out[:, 2], out[:, 1], out[:, 0]))]


def _edge_arrays(tris):
    """Unique undirected edges plus, per interior edge, the two opposite
    vertices (edge endpoints a < b, triangles in ascending index order)."""
    raw = np.concatenate([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]])
    raw.sort(axis=1)
    edges, inverse = np.unique(raw, axis=0, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(edges))
    tri_of_row = np.tile(np.arange(len(tris), dtype=np.intp), 3)
    order = np.lexsort((tri_of_row, inverse))
    first = np.searchsorted(inverse[order], np.arange(len(edges)))
    tri1 = tri_of_row[order][first]
    tri2 = np.full(len(edges), -1, dtype=np.intp)
    tri2[counts == 2] = tri_of_row[order][first[counts == 2] + 1]
    return edges, counts, tri1, tri2


def _cocircular_candidates(pts, tris):
    """Interior edges whose quad is numerically cocircular and whose
    opposite diagonal has a smaller lower endpoint."""
    edges, counts, tri1, tri2 = _edge_arrays(tris)
    interior = counts == 2
    if not interior.any():
        return edges, []
    e = edges[interior]
    s1 = tris[tri1[interior]].sum(axis=1)
    s2 = tris[tri2[interior]].sum(axis=1)
    c = s1 - e[:, 0] - e[:, 1]
    d = s2 - e[:, 0] - e[:, 1]
    pa, pb, pc, pd = pts[e[:, 0]], pts[e[:, 1]], pts[c], pts[d]
    adx, ady = pa[:, 0] - pd[:, 0], pa[:, 1] - pd[:, 1]
    bdx, bdy = pb[:, 0] - pd[:, 0], pb[:, 1] - pd[:, 1]
    cdx, cdy = pc[:, 0] - pd[:, 0], pc[:, 1] - pd[:, 1]
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    near = (np.abs(det) < COCIRCULAR_TOL) & (np.minimum(c, d) < e[:, 0])
    return edges, [tuple(pair) for pair in e[near]]


class _TriangleSoup:
    """Mutable triangle set with an edge map, for flip surgery."""

    def __init__(self, pts, tris):
        self.pts = pts
        self.tris = {i: tuple(t) for i, t in enumerate(np.asarray(tris))}
        self.next_id = len(self.tris)
        self.edges = {}
        for i, t in self.tris.items():
            for e in self._tri_edges(t):
                self.edges.setdefault(e, []).append(i)

    @staticmethod
    def _tri_edges(t):
        return (
            (min(t[0], t[1]), max(t[0], t[1])),
            (min(t[1], t[2]), max(t[1], t[2])),
            (min(t[2], t[0]), max(t[2], t[0])),
        )

    def has_edge(self, a, b):
        return (min(a, b), max(a, b)) in self.edges

    def remove(self, i):
        for e in self._tri_edges(self.tris[i]):
            self.edges[e].remove(i)
            if not self.edges[e]:
                del self.edges[e]
        del self.tris[i]

    def add(self, t):
        i = self.next_id
        self.next_id += 1
        self.tris[i] = t
        for e in self._tri_edges(t):
            self.edges.setdefault(e, []).append(i)
        return i

    def opposite_vertices(self, a, b):
        out = []
        for i in self.edges[(min(a, b), max(a, b))]:
            t = self.tris[i]
            out.append((i, next(v for v in t if v not in (a, b))))
        return out

    def flip(self, a, b):
        """Replace diagonal a-b of its two-triangle quad with the other one.

        Returns the new diagonal, or None when the quad is not convex.
        """
        inc = self.opposite_vertices(a, b)
        if len(inc) != 2:
            return None
        (i1, c), (i2, d) = inc
        if orient2d(self.pts[a], self.pts[b], self.pts[c]) < 0:
            a, b = b, a
        if (
            orient2d(self.pts[a], self.pts[d], self.pts[c]) <= 0
            or orient2d(self.pts[d], self.pts[b], self.pts[c]) <= 0
        ):
            return None
        self.remove(i1)
        self.remove(i2)
        self.add((a, d, c))
        self.add((d, b, c))
        return (min(c, d), max(c, d))

    def triangle_array(self):
        return np.array(
            [self.tris[i] for i in sorted(self.tris)], dtype=np.intp
        ).reshape(-1, 3)


def _resolve_cocircular(soup, seeds, protected=frozenset()):
    """Flip numerically cocircular quads toward the diagonal whose lower
    endpoint index is smaller, leaving protected edges alone."""
    queue = list(seeds)
    budget = 10 * len(soup.edges) + 100
    while queue and budget > 0:
        budget -= 1
        a, b = queue.pop(0)
        key = (min(a, b), max(a, b))
        if key in protected or key not in soup.edges:
            continue
        inc = soup.opposite_vertices(a, b)
        if len(inc) != 2:
            continue
        (i1, c), (i2, d) = inc
        if min(c, d) >= min(a, b):
            continue
        t1 = soup.tris[i1]
        other = d if c in t1 else c
        p = [soup.pts[v] for v in t1]
        if orient2d(*p) < 0:
            p = [p[0], p[2], p[1]]
        if incircle(*p, soup.pts[other]) == 0:
            soup.flip(a, b)


def delaunay(points):
    """Delaunay triangulation of a planar point set.

    Every triangle's circumcircle contains no other input point in its
    interior; cocircular ties are broken toward the quad diagonal whose
    lower endpoint index is smaller.  The result carries no domain.
    """
    pts = np.ascontiguousarray(points, dtype=float)
    _check_points(pts)
    tris = _orient_ccw(pts, scipy.spatial.Delaunay(pts).simplices.astype(np.intp))
    _, ties = _cocircular_candidates(pts, tris)
    if ties:
        soup = _TriangleSoup(pts, tris)
        _resolve_cocircular(soup, ties)
        tris = _orient_ccw(pts, soup.triangle_array())
    return Mesh(pts, _canonical_order(tris))


def _crossing_edges(soup, p, q):
    pp, pq = soup.pts[p], soup.pts[q]
    out = []
    for a, b in soup.edges:
        if p in (a, b) or q in (a, b):
            continue
        pa, pb = soup.pts[a], soup.pts[b]
        if (
            orient2d(pp, pq, pa) * orient2d(pp, pq, pb) < 0
            and orient2d(pa, pb, pp) * orient2d(pa, pb, pq) < 0
        ):
            out.append((a, b))
    return out


def _enforce_edge(soup, p, q):
    queue = _crossing_edges(soup, p, q)
    budget = 10 * (len(queue) + 1) ** 2 + 100
    while queue and budget > 0:
        budget -= 1
        a, b = queue.pop(0)
        if (min(a, b), max(a, b)) not in soup.edges:
            continue
        new = soup.flip(a, b)
        if new is None:
            queue.append((a, b))
            continue
        c, d = new
        pa, pb = soup.pts[c], soup.pts[d]
        pp, pq = soup.pts[p], soup.pts[q]
        if (
            orient2d(pp, pq, pa) * orient2d(pp, pq, pb) < 0
            and orient2d(pa, pb, pp) * orient2d(pa, pb, pq) < 0
        ):
            queue.append(new)
    if not soup.has_edge(p, q):
        raise BoundaryRecoveryError(
            f"could not recover boundary edge between vertices {p} and {q}"
        )


def _required_boundary_edges(domain, bpoints, bflags):
    """Consecutive sample pairs along each domain segment, as index pairs."""
    scale = max(domain.extent, 1.0)
    corner_ids = {}
    for cid, corner in enumerate(domain.corners):
        d = np.linalg.norm(bpoints - corner, axis=1)
        j = int(np.argmin(d))
        if d[j] > 1e-10 * scale:
            raise BoundaryRecoveryError(
                f"domain corner ({corner[0]:g}, {corner[1]:g}) has no "
                "boundary sample"
            )
        corner_ids[cid] = j
    required = []
    offset = 0
    for loop in domain.loops:
        n = len(loop)
        for k in range(n):
            sid = offset + k + 1
            a, b = domain.segment_points(sid)
            d = b - a
            on = np.flatnonzero(bflags == sid)
            t = (bpoints[on] - a) @ d / float(d @ d)
            chain = (
                [corner_ids[offset + k]]
                + list(on[np.argsort(t)])
                + [corner_ids[offset + (k + 1) % n]]
            )
            required.extend(zip(chain[:-1], chain[1:]))
        offset += n
    return [(min(p, q), max(p, q)) for p, q in required]


def conforming_delaunay(domain, interior_points, boundary_points):
    """Triangulate a polygonal domain through the given point sets.

    ``boundary_points`` must sample every boundary segment (domain corners
    included) and become the mesh's boundary vertices; ``interior_points``
    must lie strictly inside.  Boundary segments are recovered by edge flips
    and triangles outside the domain are discarded, so the result conforms
    to the domain exactly.
    """
    bpts = np.ascontiguousarray(boundary_points, dtype=float).reshape(-1, 2)
    ipts = np.ascontiguousarray(interior_points, dtype=float).reshape(-1, 2)
    scale = max(domain.extent, 1.0)
    bflags = domain.classify_points(bpts, tol=1e-10 * scale)
    if (bflags == INTERIOR).any():
        bad = bpts[int(np.argmax(bflags == INTERIOR))]
        raise ContainmentError(
            f"boundary point ({bad[0]:g}, {bad[1]:g}) is not on the boundary"
        )
    if len(ipts):
        inside = domain.contains_points(ipts)
        if not inside.all():
            bad = ipts[int(np.argmin(inside))]
            raise ContainmentError(
                f"interior point ({bad[0]:g}, {bad[1]:g}) is outside the domain"
            )
    pts = np.vstack([bpts, ipts]) if len(ipts) else bpts
    _check_points(pts)
    required = _required_boundary_edges(domain, bpts, bflags)
    tris = _orient_ccw(pts, scipy.spatial.Delaunay(pts).simplices.astype(np.intp))
    edges, ties = _cocircular_candidates(pts, tris)
    keys = edges[:, 0] * len(pts) + edges[:, 1]
    req = np.array(required, dtype=np.intp).reshape(-1, 2)
    req_keys = req[:, 0] * len(pts) + req[:, 1]
    missing = ~np.isin(req_keys, keys)
    if ties or missing.any():
        soup = _TriangleSoup(pts, tris)
        for p, q in req[missing]:
            _enforce_edge(soup, int(p), int(q))
        _resolve_cocircular(soup, ties, protected=set(required))
        tris = _orient_ccw(pts, soup.triangle_array())
    centroids = pts[tris].mean(axis=1)
    tris = _canonical_order(tris[domain.contains_points(centroids)])
    flags = np.concatenate([bflags, np.zeros(len(ipts), dtype=np.int32)])
    return Mesh(pts, tris, boundary_flag=flags, domain=domain)
