"""Command line experiment runner.

Subcommands: constants, moments, sweep, descriptors, pointcloud.
Exit codes: 0 pass, 1 assertion failure, 2 usage/config error, 3 domain
validity violation.  Every CSV starts with the library version and the
hash of the effective configuration; identical configuration and seed give
byte-identical output.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .charts import chart_from_id
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config_file
from .errors import ChartError, CovcurvError, DomainValidityError
from .moments import DomainSpec, QuadratureConfig, domain_moments
from .pointcloud import estimate_descriptors, load_xyz, sample_domain, save_xyz
from .sphere_integrals import (
    even_patterns_up_to,
    monomial_sphere_integral,
    monte_carlo_sphere_integral,
    pattern_label_to_powers,
)
from .sweeps import descriptor_csv, run_descriptor_sweep, run_sweep, sweep_csv

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covcurv",
        description="PCA integral invariants and curvature descriptors of embedded manifolds",
    )
    parser.add_argument("--version", action="version", version=f"covcurv {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file with [sections]")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--threads", type=int, help="worker threads for sweeps")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--plot", action="store_true", default=None,
                        help="render companion figures next to the CSV")

    domain = argparse.ArgumentParser(add_help=False)
    domain.add_argument("--manifold", help="zoo id, e.g. paraboloid(1,2)")
    domain.add_argument("--kind", choices=["cyl", "sph", "cylindrical", "spherical"])
    domain.add_argument("--eps", type=float)
    domain.add_argument("--radial-nodes", dest="radial_nodes", type=int)
    domain.add_argument("--angular", type=int)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common],
                       help="exact vs Monte-Carlo sphere-monomial integrals")
    p.add_argument("--dim", type=int, help="ambient integration dimension n")
    p.add_argument("--max-degree", dest="max_degree", type=int)
    p.add_argument("--mc-samples", dest="mc_samples", type=int)

    p = sub.add_parser("moments", parents=[common, domain],
                       help="one quadrature moment row for a single scale")
    p.add_argument("--plane", help="tilt angle in radians, or a basis file (rows in R^(n+k))")

    p = sub.add_parser("sweep", parents=[common, domain],
                       help="eps sweep: quadrature vs predictions with slope checks")
    p.add_argument("--eps-min", dest="eps_min", type=float)
    p.add_argument("--eps-max", dest="eps_max", type=float)
    p.add_argument("--eps-count", dest="eps_count", type=int)
    p.add_argument("--no-checks", dest="checks", action="store_false", default=None)

    p = sub.add_parser("descriptors", parents=[common, domain],
                       help="curvature descriptors per scale (quadrature and point cloud)")
    p.add_argument("--eps-min", dest="eps_min", type=float)
    p.add_argument("--eps-max", dest="eps_max", type=float)
    p.add_argument("--eps-count", dest="eps_count", type=int)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--noise", type=float)

    p = sub.add_parser("pointcloud", parents=[common, domain],
                       help="sample a domain to an XYZ file or estimate from one")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--in", dest="infile", help="existing cloud to estimate from")

    return parser


def _effective_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, cfg)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config", "infile", "plane")}
    return apply_overrides(cfg, overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"config_hash": cfg.config_hash()}
    meta.update(extra)
    return meta


def _quad(cfg: ExperimentConfig) -> QuadratureConfig:
    return QuadratureConfig(radial_nodes=cfg.radial_nodes, angular=cfg.angular,
                            qmc_samples=cfg.qmc_samples,
                            target_rel_error=cfg.target_rel_error)


def cmd_constants(cfg: ExperimentConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    lines = [f"# covcurv {__version__}", f"# config_hash = {cfg.config_hash()}",
             "pattern,n,exact,mc_value,mc_std_error"]
    for label in even_patterns_up_to(cfg.max_degree):
        powers = pattern_label_to_powers(cfg.dim, label)
        exact = monomial_sphere_integral(cfg.dim, powers)
        mc, se = monte_carlo_sphere_integral(cfg.dim, powers, cfg.mc_samples, rng)
        lines.append(f"{label},{cfg.dim},{exact:.17g},{mc:.17g},{se:.17g}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def _parse_plane(raw: str | None, cfg: ExperimentConfig, chart) -> np.ndarray | None:
    if raw is not None:
        try:
            cfg.plane_angle = float(raw)
        except ValueError:
            cfg.plane_file = raw
    if cfg.plane_file:
        return np.loadtxt(cfg.plane_file).reshape(chart.n, chart.ambient_dim)
    if cfg.plane_angle is not None:
        if (chart.n, chart.k) != (2, 1):
            raise ConfigError("an angle plane is only defined for surfaces in R^3")
        theta = cfg.plane_angle
        return np.array([[np.cos(theta), 0.0, np.sin(theta)], [0.0, 1.0, 0.0]])
    return None


def cmd_moments(cfg: ExperimentConfig, plane_raw: str | None) -> int:
    chart = chart_from_id(cfg.manifold)
    plane = _parse_plane(plane_raw, cfg, chart)
    spec = DomainSpec(kind=cfg.kind, eps=cfg.eps, plane=plane)
    mom = domain_moments(chart, spec, _quad(cfg))
    dim = chart.ambient_dim
    cols = (["V"] + [f"s_{i + 1}" for i in range(dim)]
            + [f"C_{i + 1}{j + 1}" for i in range(dim) for j in range(i, dim)]
            + ["quad_error"])
    vals = ([mom.V] + list(mom.s)
            + [mom.C[i, j] for i in range(dim) for j in range(i, dim)]
            + [mom.quad_error])
    lines = [f"# covcurv {__version__}", f"# config_hash = {cfg.config_hash()}",
             f"# manifold = {cfg.manifold}", f"# kind = {cfg.kind}",
             f"# eps = {cfg.eps:g}", f"# reference = {mom.reference}",
             ",".join(cols), ",".join(format(float(v), ".17g") for v in vals)]
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    chart = chart_from_id(cfg.manifold)
    report = run_sweep(chart, cfg.kind, cfg.eps_schedule(), _quad(cfg),
                       threads=cfg.threads)
    text = sweep_csv(report, _meta(cfg, manifold=cfg.manifold, kind=cfg.kind))
    _emit(text, cfg.out)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}", file=sys.stderr)
    if cfg.plot and cfg.out:
        from .plots import plot_sweep

        plot_sweep(report, cfg.out.rsplit(".", 1)[0])
    if cfg.checks and not report.passed:
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_descriptors(cfg: ExperimentConfig) -> int:
    chart = chart_from_id(cfg.manifold)
    report = run_descriptor_sweep(chart, cfg.kind, cfg.eps_schedule(), _quad(cfg),
                                  n_points=cfg.n_points, seed=cfg.seed,
                                  noise_sigma=cfg.noise, threads=cfg.threads)
    text = descriptor_csv(report, _meta(cfg, manifold=cfg.manifold, kind=cfg.kind,
                                        n_points=cfg.n_points, seed=cfg.seed))
    _emit(text, cfg.out)
    if cfg.plot and cfg.out:
        from .plots import plot_descriptors

        plot_descriptors(report, cfg.out.rsplit(".", 1)[0])
    return EXIT_OK


def cmd_pointcloud(cfg: ExperimentConfig, infile: str | None) -> int:
    chart = chart_from_id(cfg.manifold)
    spec = DomainSpec(kind=cfg.kind, eps=cfg.eps)
    if infile:
        points = load_xyz(infile)
        from .pointcloud import PointSample

        sample = PointSample(points=points, n=chart.n, k=chart.k, seed=cfg.seed,
                             noise_sigma=cfg.noise, spec=spec)
    else:
        if cfg.n_points < 1:
            raise ConfigError("pointcloud needs --n-points >= 1")
        sample = sample_domain(chart, spec, cfg.n_points, seed=cfg.seed,
                               noise_sigma=cfg.noise)
        if cfg.out:
            save_xyz(cfg.out, sample.points)

    est = estimate_descriptors(sample, None, cfg.eps, chart.n, cfg.kind)
    lines = [f"# covcurv {__version__}", f"# config_hash = {cfg.config_hash()}",
             f"# manifold = {cfg.manifold}", f"# kind = {cfg.kind}"]
    if est.report is not None:
        kappa_name = "kappa" if cfg.kind == "spherical" else "kappa_sq"
        cols = ["N", "eps", "R_est", "H_est"] + [
            f"{kappa_name}_{m + 1}" for m in range(chart.n)]
        vals = [sample.points.shape[0], cfg.eps, est.report.scalar_curvature,
                est.report.mean_curvature, *est.report.principal_values]
    else:
        cols = ["N", "eps", "trIII_est", "H_sq_est", "R_est"]
        vals = [sample.points.shape[0], cfg.eps, est.trace_III,
                est.mean_curvature_sq, est.scalar_curvature]
    lines.append(",".join(cols))
    lines.append(",".join(format(float(v), ".17g") for v in vals))
    text = "\n".join(lines) + "\n"
    if infile or not cfg.out:
        _emit(text, cfg.out if infile else None)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        cfg = _effective_config(args)
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "moments":
            return cmd_moments(cfg, getattr(args, "plane", None))
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "descriptors":
            return cmd_descriptors(cfg)
        if args.command == "pointcloud":
            return cmd_pointcloud(cfg, getattr(args, "infile", None))
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ChartError, ValueError) as exc:
        print(f"covcurv: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainValidityError as exc:
        print(f"covcurv: domain validity: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CovcurvError as exc:
        print(f"covcurv: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
