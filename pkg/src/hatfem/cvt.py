"""Density-weighted Lloyd smoothing of conforming triangulations."""

import numpy as np

from .geometry import CORNER, INTERIOR
from .mesh import locate_points
from .triangulate import conforming_delaunay

MAX_HALVINGS = 50
_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class DensityField:
    """A positive piecewise-linear density on a background mesh.

    Evaluation interpolates linearly on the containing triangle; points
    outside the background triangulation raise ContainmentError.
    """

    def __init__(self, background_mesh, nodal_values):
        values = np.array(nodal_values, dtype=float)
        if values.shape != (background_mesh.num_vertices,):
            raise ValueError("need one nodal value per background vertex")
        if not np.isfinite(values).all() or (values <= 0).any():
            raise ValueError("density nodal values must be positive")
        self.background_mesh = background_mesh
        self.nodal_values = values
        self.nodal_values.flags.writeable = False
        self._constant = (
            float(values[0]) if np.all(values == values[0]) else None
        )

    def evaluate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self._constant is not None:
            return np.full(len(points), self._constant)
        mesh = self.background_mesh
        tri, bary = locate_points(mesh, points)
        return (self.nodal_values[mesh.triangles[tri]] * bary).sum(axis=1)

    __call__ = evaluate


def uniform_density(mesh):
    return DensityField(mesh, np.ones(mesh.num_vertices))


def _dual_patch_quadrature(mesh):
    """Quadrature over the barycentric dual decomposition.

    Each triangle is split at its edge midpoints and barycenter into three
    quads, one per corner, and each quad into two subtriangles carrying a
    3-point midpoint rule.  Returns (owner vertex per subtriangle,
    quadrature points, weights) with shapes (T*6,), (T*6, 3, 2), (T*6,).
    """
    p = mesh.corner_points()
    g = p.mean(axis=1)
    m01 = 0.5 * (p[:, 0] + p[:, 1])
    m12 = 0.5 * (p[:, 1] + p[:, 2])
    m20 = 0.5 * (p[:, 2] + p[:, 0])
    subs = np.stack([
        np.stack([p[:, 0], m01, g], axis=1),
        np.stack([p[:, 0], g, m20], axis=1),
        np.stack([p[:, 1], m12, g], axis=1),
        np.stack([p[:, 1], g, m01], axis=1),
        np.stack([p[:, 2], m20, g], axis=1),
        np.stack([p[:, 2], g, m12], axis=1),
    ], axis=1)  # (T, 6, 3, 2)
    owners = mesh.triangles[:, [0, 0, 1, 1, 2, 2]].ravel()
    subs = subs.reshape(-1, 3, 2)
    d1 = subs[:, 1] - subs[:, 0]
    d2 = subs[:, 2] - subs[:, 0]
    areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    qpts = 0.5 * (subs + np.roll(subs, -1, axis=1))  # edge midpoints
    return owners, qpts, areas / 3.0


def cvt_energy(mesh, density):
    """Density-weighted second moment of the mesh's dual decomposition,
    sum over vertices z of the integral of rho |x - z|^2 over the dual cell."""
    owners, qpts, w = _dual_patch_quadrature(mesh)
    rho = density.evaluate(qpts.reshape(-1, 2)).reshape(qpts.shape[:2])
    z = mesh.vertices[owners]
    dist_sq = ((qpts - z[:, None, :]) ** 2).sum(axis=2)
    return float((w[:, None] * rho * dist_sq).sum())


def _interior_centroids(mesh, density):
    owners, qpts, w = _dual_patch_quadrature(mesh)
    rho = density.evaluate(qpts.reshape(-1, 2)).reshape(qpts.shape[:2])
    mass_terms = w[:, None] * rho
    mass = np.zeros(mesh.num_vertices)
    moment = np.zeros((mesh.num_vertices, 2))
    np.add.at(mass, owners, mass_terms.sum(axis=1))
    np.add.at(moment, owners, (mass_terms[:, :, None] * qpts).sum(axis=1))
    return moment / mass[:, None]


def _boundary_targets(mesh, density):
    """1D density-weighted centroids for non-corner boundary vertices.

    The vertex slides within the interval bounded by the midpoints of its
    two adjacent boundary edges, which lies inside its own segment.
    """
    table = mesh.edge_table()
    bedges = table.edges[table.is_boundary]
    neighbors = {}
    for a, b in bedges:
        neighbors.setdefault(int(a), []).append(int(b))
        neighbors.setdefault(int(b), []).append(int(a))
    sliding = np.flatnonzero(
        (mesh.boundary_flag != INTERIOR) & (mesh.boundary_flag != CORNER)
    )
    if len(sliding) == 0:
        return sliding, np.zeros((0, 2))
    nbr = np.array([neighbors[int(v)] for v in sliding])  # (m, 2)
    z = mesh.vertices[sliding]
    m1 = 0.5 * (z + mesh.vertices[nbr[:, 0]])
    m2 = 0.5 * (z + mesh.vertices[nbr[:, 1]])
    # composite 2-point Gauss on [m1, z] and [z, m2]
    pieces = [(m1, z), (z, m2)]
    mass = np.zeros(len(sliding))
    moment = np.zeros((len(sliding), 2))
    for a, b in pieces:
        length = np.linalg.norm(b - a, axis=1)
        for t in _GAUSS2:
            x = a + t * (b - a)
            rho = density.evaluate(x)
            wgt = 0.5 * length * rho
            mass += wgt
            moment += wgt[:, None] * x
    targets = moment / mass[:, None]
    # keep the point exactly on its domain segment
    if mesh.domain is not None:
        for i, v in enumerate(sliding):
            a, b = mesh.domain.segment_points(int(mesh.boundary_flag[v]))
            d = b - a
            t = float((targets[i] - a) @ d / (d @ d))
            targets[i] = a + t * d
    return sliding, targets


def lloyd_step(mesh, density):
    """One density-weighted Lloyd smoothing pass.

    Interior vertices move to the weighted centroid of their dual cell
    (halving the displacement, up to 50 times, if the target leaves the
    domain); non-corner boundary vertices slide along their segment;
    corners stay put.  The moved points are re-triangulated with
    conforming_delaunay, so the output conforms to the same domain.
    """
    domain = mesh.domain
    if domain is None:
        raise ValueError("lloyd_step needs a mesh with a domain")
    new = mesh.vertices.copy()
    interior = mesh.boundary_flag == INTERIOR
    centroids = _interior_centroids(mesh, density)
    prop = centroids[interior]
    orig = mesh.vertices[interior]
    outside = ~domain.contains_points(prop)
    for _ in range(MAX_HALVINGS):
        if not outside.any():
            break
        prop[outside] = orig[outside] + 0.5 * (prop[outside] - orig[outside])
        outside = ~domain.contains_points(prop)
    prop[outside] = orig[outside]
    new[interior] = prop
    sliding, targets = _boundary_targets(mesh, density)
    new[sliding] = targets
    border = ~interior
    return conforming_delaunay(domain, new[interior], new[border])


def cfcvdt_optimize(mesh, density, iters):
    """Apply ``iters`` Lloyd steps; vertex count is preserved."""
    if iters < 1:
        raise ValueError("iters must be at least 1")
    for _ in range(iters):
        mesh = lloyd_step(mesh, density)
    return mesh


def _boundary_samples(domain, spacing):
    """Evenly spaced samples of every boundary segment, corners included."""
    points = [domain.corners]
    for sid in range(1, domain.num_segments + 1):
        a, b = domain.segment_points(sid)
        length = float(np.linalg.norm(b - a))
        k = max(1, int(round(length / spacing)))
        t = np.arange(1, k) / k
        if len(t):
            points.append(a + t[:, None] * (b - a))
    return np.vstack(points)


def uniform_cvdt_mesh(domain, n_vertices, lloyd_iters=20, seed=0):
    """A centroidal-Voronoi-style mesh of the domain with exactly
    ``n_vertices`` vertices: evenly sampled boundary, seeded-random interior,
    then uniform-density Lloyd smoothing."""
    n_corners = len(domain.corners)
    if n_vertices < n_corners:
        raise ValueError("n_vertices is below the number of domain corners")
    h = np.sqrt(2.0 * domain.area / (np.sqrt(3.0) * n_vertices))
    boundary = _boundary_samples(domain, h)
    while len(boundary) > max(n_corners, n_vertices - 3):
        h *= 1.3
        boundary = _boundary_samples(domain, h)
    n_interior = n_vertices - len(boundary)
    rng = np.random.default_rng(seed)
    lo = domain.outer.min(axis=0)
    hi = domain.outer.max(axis=0)
    samples = []
    total = 0
    for margin in (0.45, 0.3, 0.15, 0.05, 0.0):
        for _ in range(200):
            if total >= n_interior:
                break
            cand = rng.uniform(lo, hi, size=(max(64, 2 * n_interior), 2))
            keep = domain.contains_points(cand)
            if margin > 0:
                keep &= domain.distance_to_boundary(cand) >= margin * h
            cand = cand[keep]
            samples.append(cand)
            total += len(cand)
        if total >= n_interior:
            break
    interior = np.vstack(samples)[:n_interior] if n_interior else \
        np.zeros((0, 2))
    if len(interior) < n_interior:
        raise RuntimeError("could not place the requested interior points")
    mesh = conforming_delaunay(domain, interior, boundary)
    if lloyd_iters > 0:
        mesh = cfcvdt_optimize(mesh, uniform_density(mesh), lloyd_iters)
    return mesh
