"""Assembly, solve, and error norms."""

import numpy as np
import pytest

from hatfem import (
    CoefficientError,
    CoefficientField,
    FeFunction,
    Mesh,
    ProblemSpec,
    assemble,
    error_norms,
    solve,
    square_domain,
    uniform_cvdt_mesh,
)
from hatfem.fem import MissingExactSolutionError

from conftest import random_square_mesh, right_triangle_mesh

# 12-point degree-6 rule for the quadrature upgrade oracle
_D6 = [
    (0.873821971016996, 0.063089014491502, 0.050844906370207),
    (0.501426509658179, 0.249286745170910, 0.116786275726379),
]
_D6_EXTRA = (0.636502499121399, 0.310352451033785, 0.053145049844816,
             0.082851075618374)


def degree6_rule():
    bary, w = [], []
    for a, b, weight in _D6:
        bary += [[a, b, b], [b, a, b], [b, b, a]]
        w += [weight] * 3
    a, b, c, weight = _D6_EXTRA
    bary += [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b],
             [c, b, a]]
    w += [weight] * 6
    return np.array(bary), np.array(w)


def linear_problem():
    def u(p):
        return 1.0 + 2.0 * p[:, 0] + 3.0 * p[:, 1]

    def grad(p):
        out = np.zeros_like(p)
        out[:, 0] = 2.0
        out[:, 1] = 3.0
        return out

    return ProblemSpec(
        domain=square_domain(),
        coefficient=CoefficientField.identity(),
        source=lambda p: np.zeros(len(p)),
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad,
    )


def test_hand_stiffness_matrix():
    prob = linear_problem()
    system = assemble(right_triangle_mesh(), prob)
    expected = np.array([
        [1.0, -0.5, -0.5],
        [-0.5, 0.5, 0.0],
        [-0.5, 0.0, 0.5],
    ])
    np.testing.assert_allclose(system.matrix.toarray(), expected,
                               atol=1e-14)


def test_zero_source_zero_rhs(square_mesh):
    system = assemble(square_mesh, linear_problem())
    np.testing.assert_array_equal(system.rhs, 0.0)


def test_variable_coefficient_symmetric_spd():
    dom = square_domain(-1.0, 1.0)
    mesh = uniform_cvdt_mesh(dom, 60, lloyd_iters=3, seed=0)
    coeff = CoefficientField.from_scalar(
        lambda p: 10.0 * np.cos(p[:, 1]),
        divergence_fn=lambda p: np.column_stack(
            [np.zeros(len(p)), -10.0 * np.sin(p[:, 1])]
        ),
    )
    prob = ProblemSpec(domain=dom, coefficient=coeff,
                       source=lambda p: np.zeros(len(p)),
                       dirichlet=lambda p: np.zeros(len(p)))
    system = assemble(mesh, prob)
    k = system.matrix
    assert abs(k - k.T).max() <= 1e-14
    free = ~system.dirichlet_mask
    dense = k[free][:, free].toarray()
    assert np.linalg.eigvalsh(dense).min() > 0


def test_non_spd_coefficient_rejected(square_mesh):
    prob = ProblemSpec(
        domain=square_domain(),
        coefficient=CoefficientField.constant(np.diag([1.0, -1.0])),
        source=lambda p: np.zeros(len(p)),
        dirichlet=lambda p: np.zeros(len(p)),
    )
    with pytest.raises(CoefficientError):
        assemble(square_mesh, prob)


def test_patch_test_linear_reproduction():
    prob = linear_problem()
    for seed in range(3):
        mesh = random_square_mesh(seed)
        u_h = solve(assemble(mesh, prob))
        exact = prob.exact_u(mesh.vertices)
        np.testing.assert_allclose(u_h.values, exact, atol=1e-9)
        norms = error_norms(u_h, prob)
        assert norms["grad_l2"] <= 1e-9
        assert norms["weighted_energy"] <= 1e-9


def test_cg_matches_dense_oracle():
    mesh = random_square_mesh(3, n_interior=60)
    system = assemble(mesh, cosine_problem())
    u_h = solve(system)
    free = ~system.dirichlet_mask
    k = system.matrix.toarray()
    rhs = system.rhs - k @ system.dirichlet_values
    direct = system.dirichlet_values.copy()
    direct[free] = np.linalg.solve(k[np.ix_(free, free)], rhs[free])
    np.testing.assert_allclose(u_h.values, direct, atol=1e-8)


def test_galerkin_orthogonality():
    mesh = random_square_mesh(4, n_interior=50)
    prob = ProblemSpec(
        domain=square_domain(),
        coefficient=CoefficientField.identity(),
        source=lambda p: np.exp(p[:, 0]) * p[:, 1],
        dirichlet=lambda p: np.zeros(len(p)),
    )
    system = assemble(mesh, prob)
    u_h = solve(system)
    residual = system.rhs - system.matrix @ u_h.values
    free = ~system.dirichlet_mask
    assert np.abs(residual[free]).max() <= 1e-9


def test_permutation_equivariance():
    mesh = random_square_mesh(5, n_interior=20)
    rng = np.random.default_rng(0)
    perm = rng.permutation(mesh.num_vertices)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    shuffled = Mesh(
        mesh.vertices[perm], inv[mesh.triangles],
        boundary_flag=mesh.boundary_flag[perm], domain=mesh.domain,
    )
    prob = linear_problem()
    u_a = solve(assemble(mesh, prob))
    u_b = solve(assemble(shuffled, prob))
    np.testing.assert_allclose(u_b.values, u_a.values[perm], atol=1e-9)


def cosine_problem():
    def u(p):
        return np.cos(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1])

    def grad(p):
        return -np.pi * np.column_stack([
            np.sin(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]),
            np.cos(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]),
        ])

    return ProblemSpec(
        domain=square_domain(),
        coefficient=CoefficientField.identity(),
        source=lambda p: 2 * np.pi ** 2 * u(p),
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad,
    )


def test_error_norms_identity_weight(square_mesh):
    u_h = solve(assemble(square_mesh, cosine_problem()))
    norms = error_norms(u_h, cosine_problem())
    assert norms["weighted_energy"] == pytest.approx(
        norms["grad_l2"], rel=1e-14
    )


def test_error_norms_quadrature_stable(square_mesh):
    # the degree-4 rule sits within coarse-mesh quadrature error of a
    # degree-6 one; a wrong rule would shift the value by orders more
    prob = cosine_problem()
    u_h = solve(assemble(square_mesh, prob))
    reported = error_norms(u_h, prob)["grad_l2"]
    bary, w = degree6_rule()
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    corners = square_mesh.vertices[square_mesh.triangles]
    qpts = np.einsum("qk,tkd->tqd", bary, corners)
    grads = u_h.element_gradients()
    exact = prob.exact_grad_u(qpts.reshape(-1, 2)).reshape(qpts.shape)
    diff = ((exact - grads[:, None, :]) ** 2).sum(axis=2)
    upgraded = float(np.sqrt(
        ((diff * w).sum(axis=1) * square_mesh.areas()).sum()
    ))
    assert abs(upgraded - reported) < 1e-4 * reported


def test_missing_exact_solution(square_mesh):
    prob = ProblemSpec(
        domain=square_domain(),
        coefficient=CoefficientField.identity(),
        source=lambda p: np.zeros(len(p)),
        dirichlet=lambda p: np.zeros(len(p)),
    )
    u_h = solve(assemble(square_mesh, prob))
    with pytest.raises(MissingExactSolutionError):
        error_norms(u_h, prob)


def test_fe_function_evaluate(square_mesh):
    vals = 1.0 + 2.0 * square_mesh.vertices[:, 0] \
        + 3.0 * square_mesh.vertices[:, 1]
    f = FeFunction(square_mesh, vals)
    assert f.num_components == 1
    rng = np.random.default_rng(6)
    pts = 0.1 + 0.8 * rng.random((20, 2))
    np.testing.assert_allclose(
        f.evaluate(pts), 1.0 + 2.0 * pts[:, 0] + 3.0 * pts[:, 1],
        atol=1e-12,
    )
    grads = f.element_gradients()
    np.testing.assert_allclose(grads[:, 0], 2.0, atol=1e-12)
    np.testing.assert_allclose(grads[:, 1], 3.0, atol=1e-12)
