"""Gradient recovery, a posteriori error estimators, and the mesh density
function they induce."""

from dataclasses import dataclass

import numpy as np

from .cvt import DensityField
from .fem import DEGREE4_BARY, DEGREE4_WEIGHTS, FeFunction, _quadrature_points
from .mesh import MeshMismatchError, TopologyError

DENSITY_FLOOR = 1e-8
RANK_TOL = 1e-10


@dataclass
class Estimate:
    """Per-element error indicators with their root-sum-square global value."""

    per_element: np.ndarray
    kind: str
    global_value: float = None

    def __post_init__(self):
        self.per_element = np.asarray(self.per_element, dtype=float)
        if (self.per_element < 0).any():
            raise ValueError("indicators must be nonnegative")
        if self.global_value is None:
            self.global_value = float(
                np.sqrt((self.per_element ** 2).sum())
            )


def _two_ring(mesh, vertex, v2t):
    ring1 = v2t[vertex]
    verts = np.unique(mesh.triangles[ring1])
    return np.unique(np.concatenate([v2t[v] for v in verts]))


def _fit_at_vertex(z, patch_centroids, patch_values):
    """Least-squares linear fit evaluated at z; None when rank-deficient."""
    rel = patch_centroids - z
    scale = np.abs(rel).max()
    if scale == 0:
        return None
    rel = rel / scale
    b = np.column_stack([np.ones(len(rel)), rel])
    n = b.T @ b
    w = np.linalg.eigvalsh(n)
    if w[0] <= RANK_TOL * w[-1]:
        return None
    return np.linalg.solve(n, b.T @ patch_values)[0]


def recover_gradient(u_h):
    """Recover a continuous P1 gradient field from a P1 scalar function.

    Per vertex, a linear polynomial is fitted by least squares to the
    element gradients at the patch centroids and evaluated at the vertex.
    Boundary vertices use the two-ring patch; rank-deficient interior
    patches are enlarged to two rings and, failing that, fall back to the
    area-weighted patch average.
    """
    if u_h.values.ndim != 1:
        raise ValueError("recover_gradient expects a scalar P1 function")
    mesh = u_h.mesh
    grads = u_h.element_gradients()
    centroids = mesh.centroids()
    areas = mesh.signed_areas()
    v2t = mesh.vertex_triangles()
    boundary = mesh.boundary_flag != 0
    recovered = np.empty((mesh.num_vertices, 2))
    for v in range(mesh.num_vertices):
        patch = _two_ring(mesh, v, v2t) if boundary[v] else v2t[v]
        z = mesh.vertices[v]
        value = None
        if len(patch) >= 3:
            value = _fit_at_vertex(z, centroids[patch], grads[patch])
        if value is None and not boundary[v]:
            patch = _two_ring(mesh, v, v2t)
            if len(patch) >= 3:
                value = _fit_at_vertex(z, centroids[patch], grads[patch])
        if value is None:
            wts = areas[patch]
            value = (grads[patch] * wts[:, None]).sum(axis=0) / wts.sum()
        recovered[v] = value
    return FeFunction(mesh, recovered)


def residual_estimator(mesh, u_h, problem):
    """Residual-type indicators
    eta_T^2 = h_T^2 ||R_T||^2 + sum_e h_e ||J_e||^2.

    R_T = f + div(A grad u_h) with the P1 reduction of the divergence term;
    J_e is the normal jump of A grad u_h with A frozen at the edge midpoint,
    zero on boundary edges.
    """
    if u_h.mesh is not mesh and u_h.mesh.triangles.shape != mesh.triangles.shape:
        raise MeshMismatchError("u_h does not live on the given mesh")
    areas = mesh.signed_areas()
    h = mesh.diameters()
    grads = u_h.element_gradients()

    qpts = _quadrature_points(mesh, DEGREE4_BARY).reshape(-1, 2)
    f_q = np.asarray(problem.source(qpts), dtype=float).reshape(
        mesh.num_triangles, len(DEGREE4_BARY)
    )
    div_rows = problem.coefficient.divergence_rows(qpts).reshape(
        mesh.num_triangles, len(DEGREE4_BARY), 2
    )
    r_q = f_q + np.einsum("tqd,td->tq", div_rows, grads)
    r_sq = ((r_q ** 2) * DEGREE4_WEIGHTS[None, :]).sum(axis=1) * areas

    table = mesh.edge_table()
    inner = ~table.is_boundary
    a_mid = problem.coefficient.evaluate(table.midpoints[inner])
    flux_plus = np.einsum("eij,ej->ei", a_mid, grads[table.tri_plus[inner]])
    flux_minus = np.einsum("eij,ej->ei", a_mid, grads[table.tri_minus[inner]])
    jump = np.zeros(table.num_edges)
    jump[inner] = ((flux_plus - flux_minus) * table.normals[inner]).sum(axis=1)
    edge_sq = table.lengths ** 2 * jump ** 2  # h_e * ||J_e||^2 on edge e

    eta_sq = h ** 2 * r_sq + edge_sq[table.tri_edges].sum(axis=1)
    return Estimate(per_element=np.sqrt(eta_sq), kind="residual")


def recovery_estimator(u_h, recovered, weight=None):
    """Recovery indicators eta_T = ||G - grad u_h|| over each triangle,
    optionally in the energy norm of a coefficient field ``weight``."""
    if recovered.mesh is not u_h.mesh:
        raise MeshMismatchError(
            "recovered gradient and u_h live on different meshes"
        )
    mesh = u_h.mesh
    areas = mesh.signed_areas()
    grads = u_h.element_gradients()
    nodal = recovered.values[mesh.triangles]  # (T, 3, 2)
    g_q = np.einsum("qk,tkd->tqd", DEGREE4_BARY, nodal)
    diff = g_q - grads[:, None, :]
    if weight is None:
        integrand = (diff ** 2).sum(axis=2)
        kind = "recovery"
    else:
        qpts = _quadrature_points(mesh, DEGREE4_BARY).reshape(-1, 2)
        a_q = weight.evaluate(qpts).reshape(
            mesh.num_triangles, len(DEGREE4_BARY), 2, 2
        )
        integrand = np.einsum("tqd,tqde,tqe->tq", diff, a_q, diff)
        kind = "weighted-recovery"
    eta_sq = (integrand * DEGREE4_WEIGHTS[None, :]).sum(axis=1) * areas
    return Estimate(per_element=np.sqrt(np.maximum(eta_sq, 0.0)), kind=kind)


def oscillation(mesh, u_h, problem):
    """Patch oscillation osc(f, w_T) =
    (sum over patch of h^2 ||R - mean R||^2)^(1/2), the patch being the
    elements sharing an edge with T (T included)."""
    areas = mesh.signed_areas()
    h = mesh.diameters()
    grads = u_h.element_gradients()
    qpts = _quadrature_points(mesh, DEGREE4_BARY).reshape(-1, 2)
    f_q = np.asarray(problem.source(qpts), dtype=float).reshape(
        mesh.num_triangles, len(DEGREE4_BARY)
    )
    div_rows = problem.coefficient.divergence_rows(qpts).reshape(
        mesh.num_triangles, len(DEGREE4_BARY), 2
    )
    r_q = f_q + np.einsum("tqd,td->tq", div_rows, grads)
    mean = (r_q * DEGREE4_WEIGHTS[None, :]).sum(axis=1)  # weights sum to 1
    dev_sq = (((r_q - mean[:, None]) ** 2) * DEGREE4_WEIGHTS[None, :]).sum(
        axis=1
    ) * areas
    element = h ** 2 * dev_sq
    table = mesh.edge_table()
    patch_sq = element.copy()
    inner = ~table.is_boundary
    tp, tm = table.tri_plus[inner], table.tri_minus[inner]
    np.add.at(patch_sq, tp, element[tm])
    np.add.at(patch_sq, tm, element[tp])
    return np.sqrt(patch_sq)


def density_from_indicators(mesh, est):
    """Vertex density rho(z) = mean over incident triangles of eta^2 / h^4,
    normalized to mean one and floored."""
    if len(est.per_element) != mesh.num_triangles:
        raise MeshMismatchError("indicator count does not match the mesh")
    h4 = mesh.diameters() ** 4
    contrib = est.per_element ** 2 / h4
    raw = np.zeros(mesh.num_vertices)
    counts = np.zeros(mesh.num_vertices)
    np.add.at(raw, mesh.triangles.ravel(), np.repeat(contrib, 3))
    np.add.at(counts, mesh.triangles.ravel(), 1.0)
    if (counts == 0).any():
        raise TopologyError(
            f"vertex {int(np.argmax(counts == 0))} has an empty patch"
        )
    raw /= counts
    m = raw.mean()
    values = raw / m if m > 0 else np.ones_like(raw)
    return DensityField(mesh, np.maximum(values, DENSITY_FLOOR))
