"""Adaptive piecewise-linear finite elements with gradient recovery and
centroidal-Voronoi mesh optimization."""

from .adapt import (
    AdaptHistory,
    AdaptRecord,
    FitResult,
    NothingToMark,
    RateFitError,
    RefinementError,
    bisect,
    dorfler_mark,
    fit_rate,
    midpoint_refine,
    run_hat_afem,
    run_standard_afem,
    target_vertices,
)
from .benchmarks import Benchmark, benchmark_names, get_benchmark
from .cli import RunConfig, lloyd_demo, run
from .cvt import (
    DensityField,
    cfcvdt_optimize,
    cvt_energy,
    lloyd_step,
    uniform_cvdt_mesh,
    uniform_density,
)
from .estimate import (
    Estimate,
    density_from_indicators,
    oscillation,
    recover_gradient,
    recovery_estimator,
    residual_estimator,
)
from .fem import (
    CoefficientError,
    CoefficientField,
    FeFunction,
    ProblemSpec,
    SolverConvergenceError,
    SparseSystem,
    assemble,
    error_norms,
    solve,
)
from .geometry import ContainmentError, PolygonDomain, square_domain
from .mesh import (
    DegenerateTriangleError,
    EdgeTable,
    Mesh,
    MeshMismatchError,
    TopologyError,
    build_edge_table,
    locate_points,
    min_angle,
    triangle_quality,
)
from .meshio import (
    load_triangle_files,
    load_vtk,
    save_triangle_files,
    save_vtk,
)
from .triangulate import (
    BoundaryRecoveryError,
    CollinearPointsError,
    DuplicatePointsError,
    conforming_delaunay,
    delaunay,
)

__version__ = "0.1.0"
