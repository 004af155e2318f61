"""Marking, refinement, rate fitting, and the adaptive solver drivers."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .cvt import cfcvdt_optimize, uniform_cvdt_mesh, _boundary_samples
from .estimate import (
    density_from_indicators,
    recover_gradient,
    recovery_estimator,
    residual_estimator,
)
from .fem import assemble, error_norms, solve
from .geometry import INTERIOR
from .mesh import Mesh
from .triangulate import conforming_delaunay

logger = logging.getLogger("hatfem")

MAX_SOLVES = 7
MAX_ROUNDS_PER_ITERATION = 12


class NothingToMark(ValueError):
    """All indicators are zero, so no bulk criterion can be met."""


class RefinementError(RuntimeError):
    """Bisection completion failed to terminate (corrupted edge state)."""


class RateFitError(RuntimeError):
    """The fitted convergence rate cannot produce a vertex target."""


@dataclass
class AdaptRecord:
    """State captured after one solve of an adaptive loop."""

    iteration: int
    num_vertices: int
    eta: float
    error: float
    weighted_error: float
    seconds: float
    mesh: Mesh
    solution: object = field(repr=False, default=None)


@dataclass
class AdaptHistory:
    """Per-iteration records of an adaptive run plus termination data."""

    records: list
    converged: bool
    fit: object = None
    n_target: int = None

    @property
    def num_solves(self):
        return len(self.records)

    @property
    def vertex_counts(self):
        return np.array([r.num_vertices for r in self.records])

    @property
    def etas(self):
        return np.array([r.eta for r in self.records])

    @property
    def errors(self):
        return np.array([r.error for r in self.records])

    @property
    def final(self):
        return self.records[-1]


@dataclass
class FitResult:
    """Parameters of the power law eta = c * N^(-p) with log-space residual."""

    c: float
    p: float
    residual: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("fitted amplitude c must be positive")


def dorfler_mark(indicators, theta):
    """Minimum-cardinality bulk marking.

    Returns the ascending indices of the fewest elements whose squared
    indicators sum to at least ``theta`` times the squared total.  Ties are
    broken toward lower element index.
    """
    ind = np.asarray(indicators, dtype=float)
    if ind.ndim != 1 or len(ind) == 0:
        raise ValueError("indicators must be a nonempty 1-d array")
    if (ind < 0).any() or not np.isfinite(ind).all():
        raise ValueError("indicators must be finite and nonnegative")
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    sq = ind * ind
    order = np.lexsort((np.arange(len(sq)), -sq))
    csum = np.cumsum(sq[order])
    total = csum[-1]
    if total == 0.0:
        raise NothingToMark("all indicators are zero")
    count = int(np.searchsorted(csum, theta * total, side="left")) + 1
    return np.sort(order[:count])


def _bisect_rows(tris, ref_local, mids):
    """Split triangle rows through their refinement edges.

    The new vertex is the newest, so the children's refinement edges sit
    opposite it: local 2 in (apex, p, m) and local 1 in (apex, m, q).
    """
    pos = np.stack([ref_local, (ref_local + 1) % 3, (ref_local + 2) % 3],
                   axis=1)
    apq = np.take_along_axis(tris, pos, axis=1)
    c1 = np.column_stack([apq[:, 0], apq[:, 1], mids])
    c2 = np.column_stack([apq[:, 0], mids, apq[:, 2]])
    return c1, c2


def bisect(mesh, marked):
    """Newest-vertex bisection of the marked triangles with completion.

    Marked triangles are split through their refinement edges; neighbors
    are split recursively until the mesh conforms.  Each triangle gains at
    most three new descendants per call (split into 2, 3, or 4).
    """
    marked = np.unique(np.asarray(marked, dtype=np.intp))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.num_triangles:
        raise IndexError("marked triangle index out of range")
    table = mesh.edge_table()
    tris = mesh.triangles
    ref_local = mesh.refinement_edge.astype(np.intp)
    ref_edge = table.tri_edges[np.arange(mesh.num_triangles), ref_local]
    split = np.zeros(table.num_edges, dtype=bool)
    split[ref_edge[marked]] = True
    for _ in range(2 * mesh.num_triangles):
        need = split[table.tri_edges].any(axis=1) & ~split[ref_edge]
        if not need.any():
            break
        split[ref_edge[need]] = True
    else:
        raise RefinementError(
            "completion exceeded twice the triangle count; "
            "refinement-edge state is inconsistent"
        )
    split_ids = np.flatnonzero(split)
    edge_to_new = np.full(table.num_edges, -1, dtype=np.intp)
    edge_to_new[split_ids] = mesh.num_vertices + np.arange(len(split_ids))

    split_tri = split[ref_edge]
    out_tris = [tris[~split_tri]]
    out_ref = [ref_local[~split_tri].astype(np.int8)]
    idx = np.flatnonzero(split_tri)
    k = ref_local[idx]
    c1, c2 = _bisect_rows(tris[idx], k, edge_to_new[ref_edge[idx]])
    rows = table.tri_edges[idx]
    branches = (
        (c1, rows[np.arange(len(idx)), (k + 2) % 3], 2),
        (c2, rows[np.arange(len(idx)), (k + 1) % 3], 1),
    )
    for child, child_edge, klab in branches:
        again = split[child_edge]
        out_tris.append(child[~again])
        out_ref.append(np.full(int((~again).sum()), klab, dtype=np.int8))
        if again.any():
            kk = np.full(int(again.sum()), klab, dtype=np.intp)
            g1, g2 = _bisect_rows(child[again], kk,
                                  edge_to_new[child_edge[again]])
            out_tris.extend([g1, g2])
            out_ref.append(np.full(len(g1), 2, dtype=np.int8))
            out_ref.append(np.full(len(g2), 1, dtype=np.int8))

    mids = table.midpoints[split_ids]
    new_flags = np.zeros(len(split_ids), dtype=np.int32)
    on_boundary = table.is_boundary[split_ids]
    if on_boundary.any():
        if mesh.domain is not None:
            new_flags[on_boundary] = mesh.domain.classify_points(
                mids[on_boundary]
            )
        else:
            ends = table.edges[split_ids[on_boundary]]
            fa = mesh.boundary_flag[ends[:, 0]]
            fb = mesh.boundary_flag[ends[:, 1]]
            new_flags[on_boundary] = np.where(fa > 0, fa,
                                              np.where(fb > 0, fb, 1))
    return Mesh(
        np.vstack([mesh.vertices, mids]),
        np.vstack(out_tris),
        boundary_flag=np.concatenate([mesh.boundary_flag, new_flags]),
        domain=mesh.domain,
        refinement_edge=np.concatenate(out_ref),
    )


def midpoint_refine(mesh, density, by_mass=False):
    """Insert the heaviest half of the edge midpoints as new vertices.

    Midpoints are ranked (ties toward lower edge index) and the longest
    prefix holding at most half the total is inserted, never fewer than
    one point.  The default ranks by the bare density value at each
    midpoint.  With ``by_mass`` the rank weight is sqrt(rho) times the
    squared edge length, the share of vertices a density-weighted
    centroidal tessellation allocates near that edge; regional insertion
    then tracks the density mass instead of the current edge supply, which
    keeps repeated calls from piling points onto already-fine regions.
    The enriched point set is re-triangulated with conforming_delaunay.
    """
    if mesh.domain is None:
        raise ValueError("midpoint_refine needs a mesh with a domain")
    table = mesh.edge_table()
    rho = density.evaluate(table.midpoints)
    if by_mass:
        rho = np.sqrt(rho) * table.lengths ** 2
    order = np.lexsort((np.arange(table.num_edges), -rho))
    csum = np.cumsum(rho[order])
    half = 0.5 * csum[-1]
    n_new = max(int(np.searchsorted(csum, half, side="right")), 1)
    chosen = np.sort(order[:n_new])
    new_pts = table.midpoints[chosen]
    new_boundary = table.is_boundary[chosen]
    interior = mesh.boundary_flag == INTERIOR
    interior_pts = np.vstack([mesh.vertices[interior],
                              new_pts[~new_boundary]])
    boundary_pts = np.vstack([mesh.vertices[~interior],
                              new_pts[new_boundary]])
    return conforming_delaunay(mesh.domain, interior_pts, boundary_pts)


def fit_rate(history):
    """Least-squares power law through (N, eta) pairs.

    Fits log eta = log c - p log N and reports the l2 norm of the
    log-space residual.
    """
    data = np.asarray(history, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 2:
        raise ValueError("need at least two (N, eta) pairs")
    if (data <= 0).any() or not np.isfinite(data).all():
        raise ValueError("vertex counts and estimators must be positive")
    x = np.log(data[:, 0])
    y = np.log(data[:, 1])
    design = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.linalg.norm(design @ coef - y))
    return FitResult(c=float(np.exp(coef[0])), p=float(coef[1]),
                     residual=residual)


def target_vertices(fit, tol):
    """Vertex count at which the fitted power law reaches ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if fit.p <= 0:
        raise RateFitError(
            f"fitted rate p={fit.p:.3g} is not positive; no finite target"
        )
    return int(np.ceil((fit.c / tol) ** (1.0 / fit.p)))


def _estimate(mesh, u_h, problem, kind):
    if kind == "residual":
        return residual_estimator(mesh, u_h, problem)
    if kind == "recovery":
        return recovery_estimator(u_h, recover_gradient(u_h))
    if kind == "weighted-recovery":
        return recovery_estimator(u_h, recover_gradient(u_h),
                                  weight=problem.coefficient)
    raise ValueError(f"unknown estimator kind {kind!r}")


def _solve_iteration(mesh, problem, kind):
    start = time.perf_counter()
    u_h = solve(assemble(mesh, problem))
    est = _estimate(mesh, u_h, problem, kind)
    seconds = time.perf_counter() - start
    if problem.has_exact:
        norms = error_norms(u_h, problem)
        err, werr = norms["grad_l2"], norms["weighted_energy"]
    else:
        err = werr = float("nan")
    return u_h, est, err, werr, seconds


def _coarse_boundary_mesh(domain):
    boundary = _boundary_samples(domain, domain.extent / 4.0)
    return conforming_delaunay(domain, np.zeros((0, 2)), boundary)


def run_standard_afem(problem, tol, theta=0.3, estimator_kind="residual",
                      max_iters=80, initial_mesh=None):
    """Solve/estimate/mark/refine with bulk marking and bisection.

    Runs at most ``max_iters`` solves, stopping early once the global
    estimator drops to ``tol``.  The history carries one record per solve
    and ``converged=False`` when the budget ran out first.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    mesh = initial_mesh if initial_mesh is not None \
        else _coarse_boundary_mesh(problem.domain)
    records = []
    converged = False
    for k in range(max_iters):
        u_h, est, err, werr, secs = _solve_iteration(
            mesh, problem, estimator_kind
        )
        records.append(AdaptRecord(k, mesh.num_vertices, est.global_value,
                                   err, werr, secs, mesh, u_h))
        logger.info("standard k=%d N=%d eta=%.4e error=%.4e",
                    k, mesh.num_vertices, est.global_value, err)
        if est.global_value <= tol:
            converged = True
            break
        if k == max_iters - 1:
            break
        try:
            marked = dorfler_mark(est.per_element, theta)
        except NothingToMark:
            converged = True
            break
        mesh = bisect(mesh, marked)
    return AdaptHistory(records=records, converged=converged)


def run_hat_afem(problem, tol, n0, lloyd_iters=20, estimator_kind="recovery",
                 seed=0, fit_start=0):
    """Adaptive driver combining midpoint refinement, mesh optimization,
    and rate-fitted termination.

    Starts from a uniform-density optimized mesh with ``n0`` vertices and
    performs at most 7 solves.  Iterations 1..4 refine once each; at
    iteration 5 the recorded (N, eta) history from ``fit_start`` onward is
    fitted to eta = c N^(-p), the vertex count needed for ``tol`` is
    predicted, and enough refinement rounds run back to back to reach it.
    Each round inserts midpoints by estimator density, then re-optimizes
    the mesh with ``lloyd_iters`` smoothing passes.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    domain = problem.domain
    if n0 < len(domain.corners):
        raise ValueError("n0 must be at least the number of domain corners")
    mesh = uniform_cvdt_mesh(domain, n0, lloyd_iters=lloyd_iters, seed=seed)
    records = []
    converged = False
    fit = None
    n_target = None
    est = None
    for k in range(MAX_SOLVES):
        if k > 0:
            rounds = 1
            if k == 5:
                data = [(r.num_vertices, r.eta) for r in records[fit_start:]]
                try:
                    fit = fit_rate(data)
                    n_target = target_vertices(fit, tol)
                    ratio = n_target / records[-1].num_vertices
                    rounds = max(int(np.ceil(np.log2(ratio))), 1)
                    logger.debug("fit c=%.4g p=%.4g target=%d rounds=%d",
                                 fit.c, fit.p, n_target, rounds)
                except (RateFitError, ValueError) as exc:
                    logger.info("rate fit unusable (%s); one round", exc)
                    rounds = 1
                if rounds > MAX_ROUNDS_PER_ITERATION:
                    logger.warning("capping %d refinement rounds at %d",
                                   rounds, MAX_ROUNDS_PER_ITERATION)
                    rounds = MAX_ROUNDS_PER_ITERATION
            density = density_from_indicators(mesh, est)
            for _ in range(rounds):
                mesh = midpoint_refine(mesh, density, by_mass=True)
                mesh = cfcvdt_optimize(mesh, density, lloyd_iters)
        u_h, est, err, werr, secs = _solve_iteration(
            mesh, problem, estimator_kind
        )
        records.append(AdaptRecord(k, mesh.num_vertices, est.global_value,
                                   err, werr, secs, mesh, u_h))
        logger.info("hat k=%d N=%d eta=%.4e error=%.4e",
                    k, mesh.num_vertices, est.global_value, err)
        if est.global_value <= tol:
            converged = True
            break
    return AdaptHistory(records=records, converged=converged, fit=fit,
                        n_target=n_target)
