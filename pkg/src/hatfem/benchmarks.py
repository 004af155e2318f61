"""Reference elliptic problems with exact solutions and run defaults."""

from dataclasses import dataclass

import numpy as np

from .fem import CoefficientField, ProblemSpec
from .geometry import PolygonDomain, square_domain

LAYER_STEEPNESS = 60.0
LAYER_RADIUS = np.pi / 3.0
LAYER_CENTER = (1.25, -0.25)
PEAK_REGULARIZATION = 0.01


@dataclass(frozen=True)
class Benchmark:
    """A model problem bundled with its default adaptive-run parameters."""

    problem: ProblemSpec
    tol: float
    n0: int
    estimator_kind: str


def _square_smooth():
    domain = square_domain(0.0, 1.0)

    def u(p):
        return np.cos(np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1])

    def grad_u(p):
        sx = np.sin(np.pi * p[:, 0])
        cx = np.cos(np.pi * p[:, 0])
        sy = np.sin(np.pi * p[:, 1])
        cy = np.cos(np.pi * p[:, 1])
        return -np.pi * np.column_stack([sx * cy, cx * sy])

    def f(p):
        return 2.0 * np.pi ** 2 * u(p)

    problem = ProblemSpec(
        domain=domain,
        coefficient=CoefficientField.identity(),
        source=f,
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad_u,
        name="square-smooth",
    )
    return Benchmark(problem, tol=0.01, n0=289, estimator_kind="recovery")


def _lshape():
    domain = PolygonDomain(
        [(1.0, 0.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0),
         (0.0, -1.0), (0.0, 0.0)]
    )

    def _polar(p):
        r = np.hypot(p[:, 0], p[:, 1])
        theta = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * np.pi)
        return r, theta

    def u(p):
        r, theta = _polar(p)
        return r ** (2.0 / 3.0) * np.sin(2.0 * theta / 3.0)

    def grad_u(p):
        r, theta = _polar(p)
        with np.errstate(divide="ignore"):  # corner singularity
            s = (2.0 / 3.0) * r ** (-1.0 / 3.0)
        return np.column_stack(
            [-s * np.sin(theta / 3.0), s * np.cos(theta / 3.0)]
        )

    def f(p):
        return np.zeros(len(p))

    problem = ProblemSpec(
        domain=domain,
        coefficient=CoefficientField.identity(),
        source=f,
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad_u,
        name="lshape",
    )
    return Benchmark(problem, tol=0.01, n0=216, estimator_kind="recovery")


def _inner_layer():
    domain = square_domain(0.0, 1.0)
    s = LAYER_STEEPNESS
    r0 = LAYER_RADIUS
    cx, cy = LAYER_CENTER

    def _radius(p):
        return np.hypot(p[:, 0] - cx, p[:, 1] - cy)

    def u(p):
        return np.arctan(s * (_radius(p) - r0))

    def grad_u(p):
        r = _radius(p)
        slope = s / (1.0 + s ** 2 * (r - r0) ** 2)
        return (slope / r)[:, None] * np.column_stack(
            [p[:, 0] - cx, p[:, 1] - cy]
        )

    def f(p):
        r = _radius(p)
        q = 1.0 + s ** 2 * (r - r0) ** 2
        return 2.0 * s ** 3 * (r - r0) / q ** 2 - s / (r * q)

    problem = ProblemSpec(
        domain=domain,
        coefficient=CoefficientField.identity(),
        source=f,
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad_u,
        name="inner-layer",
    )
    return Benchmark(problem, tol=0.5, n0=76, estimator_kind="recovery")


def _peak():
    domain = square_domain(-1.0, 1.0)
    eps = PEAK_REGULARIZATION

    def _wells(p):
        d1x = p[:, 0] + 0.5
        d1y = p[:, 1] - 0.5
        d2x = p[:, 0] - 0.5
        d2y = p[:, 1] + 0.5
        w1 = d1x ** 2 + d1y ** 2 + eps
        w2 = d2x ** 2 + d2y ** 2 + eps
        return d1x, d1y, w1, d2x, d2y, w2

    def u(p):
        _, _, w1, _, _, w2 = _wells(p)
        return 1.0 / w1 - 1.0 / w2

    def grad_u(p):
        d1x, d1y, w1, d2x, d2y, w2 = _wells(p)
        return -2.0 * np.column_stack(
            [d1x / w1 ** 2 - d2x / w2 ** 2, d1y / w1 ** 2 - d2y / w2 ** 2]
        )

    def _laplacian(p):
        _, _, w1, _, _, w2 = _wells(p)
        return (4.0 / w1 ** 2 - 8.0 * eps / w1 ** 3) - (
            4.0 / w2 ** 2 - 8.0 * eps / w2 ** 3
        )

    def f(p):
        u_y = grad_u(p)[:, 1]
        y = p[:, 1]
        return -10.0 * np.cos(y) * _laplacian(p) + 10.0 * np.sin(y) * u_y

    coefficient = CoefficientField.from_scalar(
        lambda p: 10.0 * np.cos(p[:, 1]),
        divergence_fn=lambda p: np.column_stack(
            [np.zeros(len(p)), -10.0 * np.sin(p[:, 1])]
        ),
    )
    problem = ProblemSpec(
        domain=domain,
        coefficient=coefficient,
        source=f,
        dirichlet=u,
        exact_u=u,
        exact_grad_u=grad_u,
        name="peak",
    )
    return Benchmark(problem, tol=20.0, n0=280,
                     estimator_kind="weighted-recovery")


_BUILDERS = {
    "square-smooth": _square_smooth,
    "lshape": _lshape,
    "inner-layer": _inner_layer,
    "peak": _peak,
}


def benchmark_names():
    return sorted(_BUILDERS)


def get_benchmark(name):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        known = ", ".join(benchmark_names())
        raise ValueError(f"unknown benchmark {name!r}; choose one of {known}")
    return builder()
