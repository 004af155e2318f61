"""Benchmark problem definitions: consistency of source and solution."""

import numpy as np
import pytest

from hatfem import benchmark_names, get_benchmark


def laplacian_residual(bench, points, h=1e-5):
    # finite-difference check that -div(A grad u) = f at interior points
    prob = bench.problem
    u = prob.exact_u

    def flux(q):
        a = prob.coefficient.evaluate(q)
        gx = (u(q + [h, 0.0]) - u(q - [h, 0.0])) / (2 * h)
        gy = (u(q + [0.0, h]) - u(q - [0.0, h])) / (2 * h)
        g = np.column_stack([gx, gy])
        return np.einsum("nij,nj->ni", a, g)

    div = (flux(points + [h, 0.0])[:, 0]
           - flux(points - [h, 0.0])[:, 0]) / (2 * h) \
        + (flux(points + [0.0, h])[:, 1]
           - flux(points - [0.0, h])[:, 1]) / (2 * h)
    return -div - prob.source(points)


def interior_probe(bench, rng, n=40):
    domain = bench.problem.domain
    lo = domain.outer.min(axis=0)
    hi = domain.outer.max(axis=0)
    pts = []
    while len(pts) < n:
        cand = lo + (hi - lo) * rng.random((8 * n, 2))
        keep = domain.contains_points(cand)
        keep &= domain.distance_to_boundary(cand) > 0.05
        pts.extend(cand[keep].tolist())
    return np.array(pts[:n])


def test_benchmark_names():
    assert set(benchmark_names()) == \
        {"square-smooth", "lshape", "inner-layer", "peak"}
    with pytest.raises(ValueError):
        get_benchmark("no-such-benchmark")


@pytest.mark.parametrize("name", ["square-smooth", "inner-layer", "peak"])
def test_source_matches_exact_solution(name):
    bench = get_benchmark(name)
    rng = np.random.default_rng(1)
    pts = interior_probe(bench, rng)
    res = laplacian_residual(bench, pts)
    scale = np.abs(bench.problem.source(pts)).max() + 1.0
    assert np.abs(res).max() <= 1e-4 * scale


@pytest.mark.parametrize("name", ["square-smooth", "lshape", "inner-layer",
                                  "peak"])
def test_gradient_matches_exact_solution(name):
    bench = get_benchmark(name)
    rng = np.random.default_rng(3)
    pts = interior_probe(bench, rng)
    h = 1e-6
    u = bench.problem.exact_u
    gx = (u(pts + [h, 0.0]) - u(pts - [h, 0.0])) / (2 * h)
    gy = (u(pts + [0.0, h]) - u(pts - [0.0, h])) / (2 * h)
    g = bench.problem.exact_grad_u(pts)
    scale = np.abs(g).max() + 1.0
    np.testing.assert_allclose(g[:, 0], gx, atol=1e-6 * scale)
    np.testing.assert_allclose(g[:, 1], gy, atol=1e-6 * scale)


def test_lshape_exact_harmonic():
    # the singular benchmark solves the Laplace equation with zero source
    bench = get_benchmark("lshape")
    rng = np.random.default_rng(2)
    pts = interior_probe(bench, rng)
    np.testing.assert_allclose(bench.problem.source(pts), 0.0)
    res = laplacian_residual(bench, pts)
    assert np.abs(res).max() <= 1e-4


def test_dirichlet_matches_exact_everywhere():
    for name in benchmark_names():
        bench = get_benchmark(name)
        rng = np.random.default_rng(5)
        pts = interior_probe(bench, rng, n=25)
        np.testing.assert_allclose(bench.problem.dirichlet(pts),
                                   bench.problem.exact_u(pts), rtol=1e-12)


def test_benchmark_run_parameters():
    assert get_benchmark("square-smooth").estimator_kind == "recovery"
    assert get_benchmark("lshape").estimator_kind == "recovery"
    assert get_benchmark("inner-layer").estimator_kind == "recovery"
    assert get_benchmark("peak").estimator_kind == "weighted-recovery"
    assert get_benchmark("lshape").tol == pytest.approx(0.01)
    assert get_benchmark("inner-layer").tol == pytest.approx(0.5)
    assert get_benchmark("peak").tol == pytest.approx(20.0)
    assert get_benchmark("lshape").n0 == 216
