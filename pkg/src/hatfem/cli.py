"""Command line driver for benchmark runs and smoothing demos."""

import argparse
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .adapt import run_hat_afem, run_standard_afem
from .benchmarks import benchmark_names, get_benchmark
from .cvt import lloyd_step, uniform_cvdt_mesh, uniform_density
from .fem import assemble, error_norms, solve
from .mesh import triangle_quality
from .meshio import save_triangle_files, save_vtk

FLOAT_FMT = "%.16e"
EXIT_OK = 0
EXIT_NOT_CONVERGED = 2

_LOG_LEVELS = {
    "quiet": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging():
    level = os.environ.get("HAT_AFEM_LOG", "info").strip().lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level, logging.INFO), format="%(message)s"
    )


def _make_out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise SystemExit(f"output directory {out} is not writable: {exc}")
    return out


@dataclass(frozen=True)
class RunConfig:
    """One benchmark run: what to solve, how, and where results go.

    Parameters
    ----------
    benchmark : str
        Registered benchmark id, see benchmark_names().
    algorithm : str
        "standard" (estimate/mark/bisect) or "hat" (rate-fitted
        mesh optimization).
    estimator : str or None
        "residual", "recovery" or "weighted-recovery"; None picks
        residual for the standard algorithm and the benchmark default
        otherwise.
    tol, n0 : float or None, int or None
        Stopping tolerance and initial vertex count; None falls back
        to the benchmark defaults.
    theta : float
        Bulk marking fraction, in (0, 1).
    lloyd_iters : int
        Smoothing passes per mesh-optimization round.
    seed : int
        Fixes all randomness (initial point sampling).
    out : str
        Output directory; created if missing.
    max_iters : int
        Solve budget for the standard algorithm.
    """

    benchmark: str
    algorithm: str = "hat"
    estimator: str = None
    tol: float = None
    theta: float = 0.3
    n0: int = None
    lloyd_iters: int = 20
    seed: int = 0
    out: str = "hatfem-out"
    max_iters: int = 80


def _emit_history(history, estimator_kind, out):
    weighted = estimator_kind == "weighted-recovery"
    rows = ["k,N,error,eta,effectivity"]
    timings = ["k,seconds"]
    for rec in history.records:
        err = rec.weighted_error if weighted else rec.error
        eff = rec.eta / err
        rows.append(
            f"{rec.iteration},{rec.num_vertices},"
            + ",".join(FLOAT_FMT % v for v in (err, rec.eta, eff))
        )
        timings.append(f"{rec.iteration},{FLOAT_FMT % rec.seconds}")
        stem = out / f"iter_{rec.iteration:03d}"
        save_triangle_files(rec.mesh, stem)
        save_vtk(
            rec.mesh,
            f"{stem}.vtk",
            point_data={"u": rec.solution.values},
            title=f"iteration {rec.iteration}",
        )
    (out / "history.csv").write_text("\n".join(rows) + "\n")
    (out / "timings.csv").write_text("\n".join(timings) + "\n")


def run(config):
    """Execute one benchmark run and emit result files.

    Writes history.csv, timings.csv and per-iteration mesh/solution
    files (legacy VTK plus .node/.ele) into config.out, then returns
    the AdaptHistory.
    """
    bench = get_benchmark(config.benchmark)
    tol = config.tol if config.tol is not None else bench.tol
    n0 = config.n0 if config.n0 is not None else bench.n0
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 < config.theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    estimator = config.estimator
    if estimator is None:
        estimator = (
            "residual" if config.algorithm == "standard"
            else bench.estimator_kind
        )
    out = _make_out_dir(config.out)
    if config.algorithm == "standard":
        history = run_standard_afem(
            bench.problem, tol, theta=config.theta,
            estimator_kind=estimator, max_iters=config.max_iters,
        )
    else:
        history = run_hat_afem(
            bench.problem, tol, n0, lloyd_iters=config.lloyd_iters,
            estimator_kind=estimator, seed=config.seed,
        )
    _emit_history(history, estimator, out)
    return history


def lloyd_demo(n_points, iters, seed=0, out="hatfem-out"):
    """Smooth a random triangulation and track the FE gradient error.

    Starts from n_points randomly placed vertices in the unit square,
    applies `iters` smoothing passes, and after each pass solves the
    smooth model problem and records its gradient error together with
    the mean triangle quality.  Writes lloyd.csv (iters + 1 rows) into
    `out` and returns its path.
    """
    if n_points < 10:
        raise ValueError("need at least 10 points")
    out = _make_out_dir(out)
    problem = get_benchmark("square-smooth").problem
    mesh = uniform_cvdt_mesh(
        problem.domain, n_points, lloyd_iters=0, seed=seed
    )
    rows = ["iteration,error,mean_quality"]
    for i in range(iters + 1):
        if i > 0:
            mesh = lloyd_step(mesh, uniform_density(mesh))
        u_h = solve(assemble(mesh, problem))
        err = error_norms(u_h, problem)["grad_l2"]
        quality = float(triangle_quality(mesh).mean())
        rows.append(f"{i},{FLOAT_FMT % err},{FLOAT_FMT % quality}")
    path = out / "lloyd.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def _cmd_run(args):
    config = RunConfig(
        benchmark=args.benchmark, algorithm=args.algorithm,
        estimator=args.estimator, tol=args.tol, theta=args.theta,
        n0=args.n0, lloyd_iters=args.lloyd_iters, seed=args.seed,
        out=args.out, max_iters=args.max_iters,
    )
    history = run(config)
    final = history.final
    print(
        f"{args.benchmark} {args.algorithm}: "
        f"{history.num_solves} solves, N={final.num_vertices}, "
        f"eta={final.eta:.4e}, converged={history.converged}"
    )
    return EXIT_OK if history.converged else EXIT_NOT_CONVERGED


def _cmd_lloyd_demo(args):
    path = lloyd_demo(
        args.n_points, args.iters, seed=args.seed, out=args.out
    )
    final_err = path.read_text().splitlines()[-1].split(",")[1]
    print(f"lloyd demo: {args.iters} smoothing passes, "
          f"final error {float(final_err):.4e}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hatfem",
        description="Adaptive piecewise-linear FEM with recovery estimation "
                    "and mesh optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an adaptive benchmark")
    run_p.add_argument("--benchmark", required=True,
                       choices=benchmark_names())
    run_p.add_argument("--algorithm", default="hat",
                       choices=["standard", "hat"])
    run_p.add_argument("--estimator",
                       choices=["residual", "recovery", "weighted-recovery"])
    run_p.add_argument("--tol", type=float,
                       help="estimator stopping tolerance "
                            "(default: per benchmark)")
    run_p.add_argument("--theta", type=float, default=0.3,
                       help="bulk marking fraction for the standard "
                            "algorithm")
    run_p.add_argument("--n0", type=int,
                       help="initial vertex count for the hat algorithm "
                            "(default: per benchmark)")
    run_p.add_argument("--lloyd-iters", type=int, default=20)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default="hatfem-out")
    run_p.add_argument("--max-iters", type=int, default=80)
    run_p.set_defaults(func=_cmd_run)

    demo = sub.add_parser(
        "lloyd-demo",
        help="smooth a random triangulation and track the FE error",
    )
    demo.add_argument("--n-points", type=int, default=1089)
    demo.add_argument("--iters", type=int, default=50)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--out", default="hatfem-out")
    demo.set_defaults(func=_cmd_lloyd_demo)
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        raise SystemExit(str(exc))
