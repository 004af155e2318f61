"""Planar geometric predicates and polygonal domains.

Float predicates fall back to exact rational arithmetic when the
double-precision determinant is too close to zero to trust its sign.
"""

from fractions import Fraction

import numpy as np

# below this magnitude a float determinant sign is recomputed exactly
EXACT_FALLBACK_THRESHOLD = 1e-10

INTERIOR = 0
CORNER = -1


class ContainmentError(ValueError):
    """A point is not where the caller promised it would be."""


def _sign(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def orient2d(a, b, c):
    """Sign of the signed area of triangle (a, b, c).

    Returns +1 for counterclockwise, -1 for clockwise, 0 for collinear.
    """
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(det) >= EXACT_FALLBACK_THRESHOLD:
        return _sign(det)
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return _sign(det)


def incircle(a, b, c, d):
    """Sign of the incircle determinant for counterclockwise (a, b, c).

    Returns +1 if d lies strictly inside the circumcircle of (a, b, c),
    -1 if strictly outside, 0 if the four points are cocircular.
    """
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    if abs(det) >= EXACT_FALLBACK_THRESHOLD:
        return _sign(det)
    pts = []
    for p in (a, b, c):
        px = Fraction(float(p[0])) - Fraction(float(d[0]))
        py = Fraction(float(p[1])) - Fraction(float(d[1]))
        pts.append((px, py, px * px + py * py))
    (ax, ay, aq), (bx, by, bq), (cx, cy, cq) = pts
    det = aq * (bx * cy - cx * by) + bq * (cx * ay - ax * cy) + cq * (ax * by - bx * ay)
    return _sign(det)


def signed_loop_area(loop):
    """Shoelace area of a closed polygonal loop given as an (n, 2) array."""
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p0, p1, q0, q1):
    """True if closed segments p0p1 and q0q1 intersect beyond shared endpoints."""
    d1 = orient2d(q0, q1, p0)
    d2 = orient2d(q0, q1, p1)
    d3 = orient2d(p0, p1, q0)
    d4 = orient2d(p0, p1, q1)
    if d1 != d2 and d3 != d4:
        return True

    def on(a, b, c):
        return (
            orient2d(a, b, c) == 0
            and min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    return on(q0, q1, p0) or on(q0, q1, p1) or on(p0, p1, q0) or on(p0, p1, q1)


def point_segment_distance(points, a, b):
    """Distance from each point in (n, 2) to the segment a-b."""
    points = np.atleast_2d(points)
    d = b - a
    denom = float(d @ d)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ d / denom, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1)


class PolygonDomain:
    """A simple polygon with optional polygonal holes.

    The outer loop is counterclockwise, holes are clockwise.  Boundary
    segments are numbered 1..S following the outer loop then each hole.
    """

    def __init__(self, outer, holes=()):
        outer = np.ascontiguousarray(outer, dtype=float)
        holes = [np.ascontiguousarray(h, dtype=float) for h in holes]
        if outer.ndim != 2 or outer.shape[1] != 2 or len(outer) < 3:
            raise ValueError("outer loop must be an (n >= 3, 2) array")
        if signed_loop_area(outer) <= 0:
            raise ValueError("outer loop must be counterclockwise")
        for h in holes:
            if h.ndim != 2 or h.shape[1] != 2 or len(h) < 3:
                raise ValueError("hole loops must be (n >= 3, 2) arrays")
            if signed_loop_area(h) >= 0:
                raise ValueError("hole loops must be clockwise")
        self.outer = outer
        self.holes = holes
        self._check_simple()
        segs_a, segs_b = [], []
        for loop in self.loops:
            segs_a.append(loop)
            segs_b.append(np.roll(loop, -1, axis=0))
        self.segment_starts = np.vstack(segs_a)
        self.segment_ends = np.vstack(segs_b)
        self.corners = self.segment_starts.copy()
        for arr in (self.outer, *self.holes, self.segment_starts,
                    self.segment_ends, self.corners):
            arr.flags.writeable = False

    @property
    def loops(self):
        return [self.outer] + self.holes

    @property
    def num_segments(self):
        return len(self.segment_starts)

    @property
    def area(self):
        return signed_loop_area(self.outer) + sum(
            signed_loop_area(h) for h in self.holes
        )

    @property
    def perimeter(self):
        return float(
            np.linalg.norm(self.segment_ends - self.segment_starts, axis=1).sum()
        )

    @property
    def extent(self):
        lo = self.outer.min(axis=0)
        hi = self.outer.max(axis=0)
        return float(max(hi - lo))

    def _check_simple(self):
        loops = self.loops
        for loop in loops:
            n = len(loop)
            for i in range(n):
                a0, a1 = loop[i], loop[(i + 1) % n]
                if np.allclose(a0, a1):
                    raise ValueError("zero-length boundary segment")
                for j in range(i + 1, n):
                    if j == i or (j + 1) % n == i or (i + 1) % n == j:
                        continue
                    b0, b1 = loop[j], loop[(j + 1) % n]
                    if _segments_intersect(a0, a1, b0, b1):
                        raise ValueError("boundary loop is self-intersecting")
        for li in range(len(loops)):
            for lj in range(li + 1, len(loops)):
                for i in range(len(loops[li])):
                    a0 = loops[li][i]
                    a1 = loops[li][(i + 1) % len(loops[li])]
                    for j in range(len(loops[lj])):
                        b0 = loops[lj][j]
                        b1 = loops[lj][(j + 1) % len(loops[lj])]
                        if _segments_intersect(a0, a1, b0, b1):
                            raise ValueError("boundary loops intersect each other")
        for h in self.holes:
            if not self.contains_points(h.mean(axis=0)[None, :],
                                        loops=[self.outer])[0]:
                raise ValueError("hole lies outside the outer loop")

    def contains_points(self, points, loops=None):
        """Ray-casting point-in-domain test; boundary points are unreliable."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if loops is None:
            a, b = self.segment_starts, self.segment_ends
        else:
            a = np.vstack(loops)
            b = np.vstack([np.roll(l, -1, axis=0) for l in loops])
        px = points[:, 0][:, None]
        py = points[:, 1][:, None]
        ax, ay = a[:, 0][None, :], a[:, 1][None, :]
        bx, by = b[:, 0][None, :], b[:, 1][None, :]
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (py - ay) * (bx - ax) / (by - ay)
        hits = straddle & (px < xcross)
        return hits.sum(axis=1) % 2 == 1

    def distance_to_boundary(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        dist = np.full(len(points), np.inf)
        for a, b in zip(self.segment_starts, self.segment_ends):
            np.minimum(dist, point_segment_distance(points, a, b), out=dist)
        return dist

    def classify_points(self, points, tol=1e-10):
        """Boundary markers for points: CORNER, a 1-based segment id, or INTERIOR.

        A point more than ``tol`` from every segment is INTERIOR (0); the
        caller is responsible for it actually being inside the domain.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        flags = np.zeros(len(points), dtype=np.int32)
        corner_d = np.linalg.norm(
            points[:, None, :] - self.corners[None, :, :], axis=2
        )
        flags[corner_d.min(axis=1) <= tol] = CORNER
        undecided = flags == 0
        for sid, (a, b) in enumerate(zip(self.segment_starts, self.segment_ends),
                                     start=1):
            if not undecided.any():
                break
            d = point_segment_distance(points[undecided], a, b)
            idx = np.flatnonzero(undecided)[d <= tol]
            flags[idx] = sid
            undecided[idx] = False
        return flags

    def segment_points(self, sid):
        """Endpoints (a, b) of 1-based boundary segment sid."""
        return self.segment_starts[sid - 1], self.segment_ends[sid - 1]


def square_domain(lo=0.0, hi=1.0):
    return PolygonDomain(
        [[lo, lo], [hi, lo], [hi, hi], [lo, hi]]
    )
