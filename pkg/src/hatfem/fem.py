"""Piecewise-linear Lagrange finite elements for  -div(A grad u) = f."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .geometry import INTERIOR
from .mesh import Mesh, MeshMismatchError, locate_points

CG_RELATIVE_TOL = 1e-12
DIVERGENCE_FD_STEP = 1e-6

# edge-midpoint rule, exact for quadratics
MIDPOINT_BARY = np.array([
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
])
MIDPOINT_WEIGHTS = np.full(3, 1.0 / 3.0)

# six-point rule, exact for quartics
_D4A, _D4B = 0.445948490915965, 0.091576213509771
DEGREE4_BARY = np.array([
    [1.0 - 2.0 * _D4A, _D4A, _D4A],
    [_D4A, 1.0 - 2.0 * _D4A, _D4A],
    [_D4A, _D4A, 1.0 - 2.0 * _D4A],
    [1.0 - 2.0 * _D4B, _D4B, _D4B],
    [_D4B, 1.0 - 2.0 * _D4B, _D4B],
    [_D4B, _D4B, 1.0 - 2.0 * _D4B],
])
DEGREE4_WEIGHTS = np.array(
    [0.223381589678011] * 3 + [0.109951743655322] * 3
)


class CoefficientError(ValueError):
    """The diffusion coefficient is not symmetric positive definite."""


class SolverConvergenceError(RuntimeError):
    """The linear solver failed to reach the target residual."""


class MissingExactSolutionError(ValueError):
    """The problem does not carry the exact data the caller asked for."""


class CoefficientField:
    """A 2x2 diffusion coefficient A(x) evaluated at batches of points.

    ``divergence_rows`` returns the column sums of derivatives,
    (d/dx A11 + d/dy A21, d/dx A12 + d/dy A22), used by the interior
    residual of the error estimator; it is analytic when provided, exact
    zero for constant fields, and otherwise a central difference.
    """

    def __init__(self, matrix_fn=None, divergence_fn=None, constant=None):
        if (matrix_fn is None) == (constant is None):
            raise ValueError("give either matrix_fn or constant")
        if constant is not None:
            constant = np.asarray(constant, dtype=float)
            if constant.ndim == 0:
                constant = float(constant) * np.eye(2)
            if constant.shape != (2, 2):
                raise ValueError("constant coefficient must be scalar or 2x2")
        self._matrix_fn = matrix_fn
        self._divergence_fn = divergence_fn
        self._constant = constant

    @property
    def is_constant(self):
        return self._constant is not None

    @classmethod
    def identity(cls):
        return cls(constant=np.eye(2))

    @classmethod
    def constant(cls, value):
        return cls(constant=value)

    @classmethod
    def from_scalar(cls, scalar_fn, divergence_fn=None):
        """Isotropic field a(x) * I from a vectorized scalar function."""

        def matrix(points):
            a = np.asarray(scalar_fn(points), dtype=float)
            out = np.zeros((len(points), 2, 2))
            out[:, 0, 0] = a
            out[:, 1, 1] = a
            return out

        return cls(matrix_fn=matrix, divergence_fn=divergence_fn)

    def evaluate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self._constant is not None:
            return np.broadcast_to(
                self._constant, (len(points), 2, 2)
            ).copy()
        out = np.asarray(self._matrix_fn(points), dtype=float)
        if out.shape != (len(points), 2, 2):
            raise ValueError("matrix_fn must return (n, 2, 2)")
        return out

    def check_spd(self, points):
        a = self.evaluate(points)
        sym_err = np.abs(a[:, 0, 1] - a[:, 1, 0])
        tr = a[:, 0, 0] + a[:, 1, 1]
        det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
        scale = np.abs(a).reshape(len(a), -1).max(axis=1)
        bad = (sym_err > 1e-10 * np.maximum(scale, 1.0)) | (tr <= 0) | (det <= 0)
        if bad.any():
            pt = np.atleast_2d(points)[int(np.argmax(bad))]
            raise CoefficientError(
                f"coefficient is not SPD at point ({pt[0]:g}, {pt[1]:g})"
            )
        return a

    def divergence_rows(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self._constant is not None:
            return np.zeros((len(points), 2))
        if self._divergence_fn is not None:
            out = np.asarray(self._divergence_fn(points), dtype=float)
            if out.shape != (len(points), 2):
                raise ValueError("divergence_fn must return (n, 2)")
            return out
        h = DIVERGENCE_FD_STEP
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        dx = (self.evaluate(points + ex) - self.evaluate(points - ex)) / (2 * h)
        dy = (self.evaluate(points + ey) - self.evaluate(points - ey)) / (2 * h)
        return np.column_stack([
            dx[:, 0, 0] + dy[:, 1, 0],
            dx[:, 0, 1] + dy[:, 1, 1],
        ])


@dataclass
class ProblemSpec:
    """An elliptic model problem -div(A grad u) = f with Dirichlet data g."""

    domain: object
    coefficient: CoefficientField
    source: Callable
    dirichlet: Callable
    exact_u: Optional[Callable] = None
    exact_grad_u: Optional[Callable] = None
    name: str = ""

    def __post_init__(self):
        if (self.exact_u is None) != (self.exact_grad_u is None):
            raise ValueError("exact_u and exact_grad_u must come together")

    @property
    def has_exact(self):
        return self.exact_u is not None


class FeFunction:
    """A piecewise-linear function given by nodal values on a mesh.

    ``values`` has shape (N,) for scalars or (N, 2) for vector fields.
    """

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape[0] != mesh.num_vertices or values.ndim > 2:
            raise ValueError("values must have one row per vertex")
        self.mesh = mesh
        self.values = values

    @property
    def num_components(self):
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def element_gradients(self):
        """Per-triangle gradient, shape (T, 2) for scalar functions."""
        if self.values.ndim != 1:
            raise ValueError("element_gradients expects a scalar function")
        mesh = self.mesh
        p = mesh.corner_points()
        areas = mesh.signed_areas()
        grads = np.zeros((mesh.num_triangles, 2))
        vals = self.values[mesh.triangles]
        for k in range(3):
            opp = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
            # grad of basis k is the opposite edge rotated a quarter turn
            grads[:, 0] += vals[:, k] * (-opp[:, 1])
            grads[:, 1] += vals[:, k] * opp[:, 0]
        return grads / (2.0 * areas)[:, None]

    def evaluate(self, points):
        tri, bary = locate_points(self.mesh, points)
        nodal = self.values[self.mesh.triangles[tri]]
        if self.values.ndim == 1:
            return (nodal * bary).sum(axis=1)
        return (nodal * bary[:, :, None]).sum(axis=1)


@dataclass
class SparseSystem:
    """Assembled stiffness matrix and load vector with Dirichlet data.

    The matrix is kept unconstrained; the Dirichlet rows/columns are
    eliminated symmetrically inside :func:`solve`.
    """

    mesh: Mesh
    matrix: scipy.sparse.csr_matrix
    rhs: np.ndarray
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray = field(repr=False, default=None)


def _quadrature_points(mesh, bary):
    """Physical coordinates of quadrature points, shape (T, Q, 2)."""
    return np.einsum("qk,tkd->tqd", bary, mesh.corner_points())


def basis_gradients(mesh):
    """Gradients of the three nodal basis functions, shape (T, 3, 2)."""
    p = mesh.corner_points()
    areas = mesh.signed_areas()
    grads = np.empty((mesh.num_triangles, 3, 2))
    for k in range(3):
        opp = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -opp[:, 1]
        grads[:, k, 1] = opp[:, 0]
    return grads / (2.0 * areas)[:, None, None]


def assemble(mesh, problem):
    """Assemble the P1 stiffness matrix and load vector.

    A is sampled at the three edge midpoints of each triangle, which keeps
    the element integrals exact whenever A is constant per element.
    """
    areas = mesh.signed_areas()
    grads = basis_gradients(mesh)
    qpts = _quadrature_points(mesh, MIDPOINT_BARY)  # (T, 3, 2)
    flat = qpts.reshape(-1, 2)
    a_q = problem.coefficient.check_spd(flat).reshape(mesh.num_triangles, 3, 2, 2)
    a_mean = a_q.mean(axis=1)
    local = np.einsum("tid,tde,tje,t->tij", grads, a_mean, grads, areas)

    f_q = np.asarray(problem.source(flat), dtype=float).reshape(
        mesh.num_triangles, 3
    )
    # the nodal basis values at a quadrature point are its barycentric coords
    local_rhs = np.einsum(
        "tq,q,qk->tk", f_q, MIDPOINT_WEIGHTS, MIDPOINT_BARY
    ) * areas[:, None]

    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    matrix = scipy.sparse.coo_matrix(
        (local.ravel(), (rows, cols)),
        shape=(mesh.num_vertices, mesh.num_vertices),
    ).tocsr()
    rhs = np.zeros(mesh.num_vertices)
    np.add.at(rhs, t.ravel(), local_rhs.ravel())

    mask = mesh.boundary_flag != INTERIOR
    values = np.zeros(mesh.num_vertices)
    if mask.any():
        values[mask] = np.asarray(
            problem.dirichlet(mesh.vertices[mask]), dtype=float
        )
    return SparseSystem(
        mesh=mesh,
        matrix=matrix,
        rhs=rhs,
        dirichlet_mask=mask,
        dirichlet_values=values,
    )


def solve(system):
    """Solve the constrained system with Jacobi-preconditioned CG.

    Stops at a relative residual of 1e-10 and raises
    SolverConvergenceError after 10 * N iterations.
    """
    mask = system.dirichlet_mask
    free = ~mask
    n = len(system.rhs)
    u = system.dirichlet_values.copy()
    if free.any():
        k_ff = system.matrix[free][:, free].tocsr()
        b = system.rhs[free] - system.matrix[free][:, mask] @ u[mask]
        x, final = _pcg(k_ff, b, max_iters=10 * n)
        if x is None:
            raise SolverConvergenceError(
                f"CG stalled at relative residual {final:.3e} "
                f"after {10 * n} iterations"
            )
        u[free] = x
    return FeFunction(system.mesh, u)


def _pcg(a, b, max_iters):
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0
    diag = a.diagonal()
    if (diag <= 0).any():
        raise SolverConvergenceError("stiffness diagonal is not positive")
    inv_diag = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(max_iters):
        ap = a @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        res = float(np.linalg.norm(r)) / bnorm
        if res <= CG_RELATIVE_TOL:
            return x, res
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return None, float(np.linalg.norm(r)) / bnorm


def error_norms(u_h, problem):
    """Gradient errors of u_h against the problem's exact solution.

    Returns a dict with ``grad_l2`` = ||grad u - grad u_h|| and
    ``weighted_energy`` = ||A^(1/2)(grad u - grad u_h)||, both by a
    six-point (degree four) rule.
    """
    if not problem.has_exact:
        raise MissingExactSolutionError(
            f"problem {problem.name!r} has no exact solution"
        )
    mesh = u_h.mesh
    areas = mesh.signed_areas()
    grads = u_h.element_gradients()
    qpts = _quadrature_points(mesh, DEGREE4_BARY)
    flat = qpts.reshape(-1, 2)
    exact = np.asarray(problem.exact_grad_u(flat), dtype=float).reshape(
        mesh.num_triangles, len(DEGREE4_BARY), 2
    )
    diff = exact - grads[:, None, :]
    a_q = problem.coefficient.evaluate(flat).reshape(
        mesh.num_triangles, len(DEGREE4_BARY), 2, 2
    )
    plain = (diff ** 2).sum(axis=2)
    weighted = np.einsum("tqd,tqde,tqe->tq", diff, a_q, diff)
    w = DEGREE4_WEIGHTS[None, :] * areas[:, None]
    return {
        "grad_l2": float(np.sqrt((plain * w).sum())),
        "weighted_energy": float(np.sqrt((weighted * w).sum())),
    }
