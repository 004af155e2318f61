"""Marking, refinement, rate fitting, and the adaptive drivers."""

import itertools

import numpy as np
import pytest

from hatfem import (
    DensityField,
    FitResult,
    Mesh,
    NothingToMark,
    PolygonDomain,
    RateFitError,
    bisect,
    dorfler_mark,
    fit_rate,
    get_benchmark,
    midpoint_refine,
    min_angle,
    run_hat_afem,
    run_standard_afem,
    target_vertices,
    uniform_cvdt_mesh,
)

from conftest import two_triangle_square


def brute_force_minimum(eta, theta):
    # smallest subset with sum(eta_i^2) >= theta * sum(eta^2), found by
    # scanning cardinality classes exhaustively
    total = float((eta ** 2).sum())
    n = len(eta)
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            if (eta[list(combo)] ** 2).sum() >= theta * total - 1e-14:
                return size
    return n


def test_dorfler_single_dominant():
    marked = dorfler_mark(np.array([3.0, 1.0, 1.0, 1.0]), theta=1.0 / 3.0)
    np.testing.assert_array_equal(marked, [0])


def test_dorfler_half_of_equal():
    marked = dorfler_mark(np.array([2.0, 2.0, 2.0, 2.0]), theta=0.5)
    assert len(marked) == 2
    assert set(marked.tolist()) <= {0, 1, 2, 3}


def test_dorfler_matches_exhaustive_minimum():
    rng = np.random.default_rng(17)
    for _ in range(40):
        eta = rng.random(rng.integers(2, 12)) + 0.01
        for theta in (0.2, 0.5, 0.8):
            marked = dorfler_mark(eta, theta=theta)
            assert len(marked) == brute_force_minimum(eta, theta)
            assert (eta[marked] ** 2).sum() >= \
                theta * (eta ** 2).sum() - 1e-12


def test_dorfler_scale_invariant():
    eta = np.array([0.9, 0.4, 0.3, 0.25, 0.1])
    a = dorfler_mark(eta, theta=0.6)
    b = dorfler_mark(2.0 * eta, theta=0.6)
    np.testing.assert_array_equal(a, b)


def test_dorfler_rejects_empty_and_theta():
    with pytest.raises(NothingToMark):
        dorfler_mark(np.zeros(4), theta=0.5)
    with pytest.raises(ValueError):
        dorfler_mark(np.array([1.0]), theta=0.0)
    with pytest.raises(ValueError):
        dorfler_mark(np.array([1.0]), theta=1.5)
    with pytest.raises(ValueError):
        dorfler_mark(np.array([1.0, -2.0]), theta=0.5)


def test_bisect_empty_marked_returns_same_mesh():
    mesh = two_triangle_square()
    out = bisect(mesh, np.array([], dtype=np.int64))
    assert out is mesh


def test_bisect_one_marked_conforming():
    mesh = two_triangle_square()
    fine = bisect(mesh, np.array([0]))
    # marking one triangle forces its neighbor across the shared edge
    assert fine.num_triangles == 4
    assert fine.num_vertices == 5
    fine.validate()
    assert fine.areas().sum() == pytest.approx(1.0, rel=1e-12)


def test_bisect_preserves_area_and_conformity():
    bench = get_benchmark("lshape")
    mesh = uniform_cvdt_mesh(bench.problem.domain, 100, lloyd_iters=5,
                             seed=3)
    area = mesh.areas().sum()
    rng = np.random.default_rng(0)
    for _ in range(5):
        k = max(1, mesh.num_triangles // 4)
        marked = rng.choice(mesh.num_triangles, size=k, replace=False)
        mesh = bisect(mesh, marked)
        mesh.validate()
    assert mesh.areas().sum() == pytest.approx(area, rel=1e-12)
    assert min_angle(mesh) > 0.05


def test_bisect_rejects_out_of_range():
    mesh = two_triangle_square()
    with pytest.raises(IndexError):
        bisect(mesh, np.array([5]))


def test_midpoint_refine_uniform_density():
    mesh = two_triangle_square()
    rho = DensityField(mesh, np.ones(mesh.num_vertices))
    fine = midpoint_refine(mesh, rho)
    # floor(E/2) = floor(5/2) = 2 insertions on top of 4 vertices
    assert fine.num_vertices == 6
    fine.validate()
    assert fine.areas().sum() == pytest.approx(1.0, rel=1e-12)


def test_midpoint_refine_budget_hand_case():
    # midpoint masses approx (5, 3, 2): the half-mass budget admits only
    # the heaviest edge, so exactly one vertex is inserted
    domain = PolygonDomain([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = Mesh(verts, np.array([[0, 1, 2]]),
                boundary_flag=np.array([-1, -1, -1], dtype=np.int32),
                domain=domain)
    rho = DensityField(mesh, np.array([1e-9, 4.0, 6.0]))
    fine = midpoint_refine(mesh, rho)
    assert fine.num_vertices == 4
    fine.validate()


def test_midpoint_refine_always_progresses():
    mesh = two_triangle_square()
    rng = np.random.default_rng(5)
    for _ in range(10):
        rho = DensityField(mesh, rng.random(4) + 1e-6)
        fine = midpoint_refine(mesh, rho)
        assert fine.num_vertices >= mesh.num_vertices + 1
        fine.validate()


def test_midpoint_refine_by_mass_targets_heavy_region():
    bench = get_benchmark("lshape")
    mesh = uniform_cvdt_mesh(bench.problem.domain, 150, lloyd_iters=8,
                             seed=1)
    vals = 1.0 + 100.0 * np.exp(-20.0 * (mesh.vertices ** 2).sum(axis=1))
    rho = DensityField(mesh, vals)
    fine = midpoint_refine(mesh, rho, by_mass=True)
    fine.validate()
    added_count = fine.num_vertices - mesh.num_vertices
    assert added_count >= 1
    near = np.linalg.norm(fine.vertices, axis=1) < 0.5
    near_before = np.linalg.norm(mesh.vertices, axis=1) < 0.5
    assert near.sum() > near_before.sum()


def test_fit_rate_exact_power_law():
    n = np.array([100.0, 400.0, 1600.0, 6400.0])
    fit = fit_rate(np.column_stack([n, 2.0 * n ** -0.5]))
    assert fit.c == pytest.approx(2.0, rel=1e-10)
    assert fit.p == pytest.approx(0.5, rel=1e-10)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_frozen_oracle():
    # least-squares fit of log eta = log c - p log N on four recorded
    # (N, eta) pairs; constants frozen from an independent computation
    history = [
        (402.0, 4.9062e-2),
        (705.0, 3.3949e-2),
        (1326.0, 2.3215e-2),
        (2702.0, 1.5467e-2),
    ]
    fit = fit_rate(history)
    assert fit.p == pytest.approx(0.604472106159187, rel=1e-12)
    assert fit.c == pytest.approx(1.813873953246905, rel=1e-12)
    assert target_vertices(fit, 0.01) == 5452


def test_fit_rate_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_rate([(100.0, 1.0)])
    with pytest.raises(ValueError):
        fit_rate([(100.0, 1.0), (200.0, -1.0)])
    with pytest.raises(ValueError):
        fit_rate([(100.0, 1.0), (-200.0, 0.5)])


def test_fit_rate_duplicate_sizes():
    fit = fit_rate([(100.0, 1.0), (100.0, 1.0), (400.0, 0.5)])
    assert fit.p == pytest.approx(0.5, rel=1e-10)


def test_target_vertices_examples():
    fit = FitResult(c=2.0, p=0.5, residual=0.0)
    assert target_vertices(fit, 0.01) == 40000
    assert target_vertices(fit, 100.0) == 1
    with pytest.raises(RateFitError):
        target_vertices(FitResult(c=1.0, p=-0.2, residual=0.0), 0.01)
    with pytest.raises(ValueError):
        target_vertices(fit, 0.0)


def test_fit_result_rejects_nonpositive_amplitude():
    with pytest.raises(ValueError):
        FitResult(c=0.0, p=0.5, residual=0.0)


def test_standard_afem_trivial_tolerance():
    hist = run_standard_afem(get_benchmark("square-smooth").problem,
                             tol=1e9, theta=0.3)
    assert len(hist.records) == 1
    assert hist.converged


def test_standard_afem_validates_arguments():
    prob = get_benchmark("square-smooth").problem
    with pytest.raises(ValueError):
        run_standard_afem(prob, tol=-1.0)
    with pytest.raises(ValueError):
        run_standard_afem(prob, tol=0.1, theta=1.0)


def test_standard_afem_decreases_estimate():
    hist = run_standard_afem(get_benchmark("lshape").problem, tol=1e-12,
                             theta=0.3, max_iters=16)
    assert len(hist.records) == 16
    assert not hist.converged
    ns = hist.vertex_counts
    assert (ns[1:] > ns[:-1]).all()
    assert hist.etas[-1] < 0.5 * hist.etas[0]


def test_hat_afem_trivial_tolerance():
    hist = run_hat_afem(get_benchmark("square-smooth").problem, tol=1e9,
                        n0=120, lloyd_iters=5, seed=0)
    assert len(hist.records) == 1
    assert hist.converged


def test_hat_afem_solve_budget_and_monotone_sizes():
    hist = run_hat_afem(get_benchmark("square-smooth").problem, tol=0.05,
                        n0=120, lloyd_iters=5, seed=0)
    assert len(hist.records) <= 7
    ns = hist.vertex_counts
    assert (ns[1:] > ns[:-1]).all()
    assert hist.converged
    assert hist.final.eta <= 0.05


def test_hat_afem_deterministic():
    kw = dict(tol=0.08, n0=100, lloyd_iters=5, seed=7)
    prob = get_benchmark("square-smooth").problem
    h1 = run_hat_afem(prob, **kw)
    h2 = run_hat_afem(prob, **kw)
    assert h1.vertex_counts.tolist() == h2.vertex_counts.tolist()
    assert h1.etas.tolist() == h2.etas.tolist()


def test_hat_afem_validates_arguments():
    prob = get_benchmark("square-smooth").problem
    with pytest.raises(ValueError):
        run_hat_afem(prob, tol=0.0, n0=100)
    with pytest.raises(ValueError):
        run_hat_afem(prob, tol=0.1, n0=2)
