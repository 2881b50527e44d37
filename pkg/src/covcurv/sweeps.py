"""Scale sweeps: quadrature vs. prediction residuals, slopes, reports.

run_sweep computes, for every scale in a decreasing schedule, the quadrature
moments, their spectrum, and the closed-form predictions, then measures
log-log convergence orders of the residuals.  Residuals that sit at the
numerical noise floor (e.g. exactly-vanishing expansion coefficients) are
treated as converged rather than fed to a meaningless slope fit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .charts import ManifoldChart
from .curvature import curvature_summary, second_fundamental_form
from .errors import DomainValidityError, FitError
from .moments import DomainSpec, MomentSet, QuadratureConfig, domain_moments
from .pointcloud import estimate_descriptors, sample_domain
from .predictions import (
    DescriptorReport,
    SpectrumPrediction,
    descriptors_from_invariants,
    predict_barycenter,
    predict_eigenvalues,
    predict_volume,
)
from .spectra import EigenDecomposition, fit_expansion, loglog_slope, sym_eig
from .sphere_integrals import ball_volume

NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class SweepRow:
    eps: float
    moments: MomentSet
    eig: EigenDecomposition
    prediction: SpectrumPrediction
    V_pred: float
    s_pred: np.ndarray


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class SweepReport:
    chart_name: str
    kind: str
    n: int
    k: int
    eps: np.ndarray
    rows: list[SweepRow]
    residuals: dict[str, np.ndarray] = field(default_factory=dict)
    slopes: dict[str, float] = field(default_factory=dict)
    fits: dict[str, object] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def default_slope_thresholds(kind: str) -> dict[str, float]:
    return {
        "volume": 3.5,
        "barycenter": 3.5,
        "tangent": 4.5,
        "normal": 5.5 if kind == "spherical" else 4.5,
    }


def _eps_schedule_ok(eps_list: np.ndarray, chart: ManifoldChart) -> None:
    if np.any(np.diff(eps_list) >= 0):
        raise DomainValidityError("eps schedule must be strictly decreasing")
    ceiling = chart.eps_max()
    if eps_list[0] > ceiling:
        raise DomainValidityError(
            f"{chart.name}: eps={eps_list[0]:g} exceeds the validity ceiling {ceiling:g}"
        )


def run_sweep(chart: ManifoldChart, kind: str, eps_list, quad: QuadratureConfig | None = None,
              threads: int = 1, thresholds: dict[str, float] | None = None,
              plane: np.ndarray | None = None) -> SweepReport:
    """Quadrature/prediction comparison over a decreasing eps schedule."""
    eps_list = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    _eps_schedule_ok(eps_list, chart)
    quad = quad or QuadratureConfig()
    curv = curvature_summary(second_fundamental_form(chart))
    n, k = chart.n, chart.k

    def one(eps: float) -> SweepRow:
        spec = DomainSpec(kind=kind, eps=eps, plane=plane)
        mom = domain_moments(chart, spec, quad)
        eig = sym_eig(mom.C)
        pred = predict_eigenvalues(curv, eps, n, k, kind)
        return SweepRow(
            eps=eps, moments=mom, eig=eig, prediction=pred,
            V_pred=predict_volume(curv, eps, n, kind),
            s_pred=predict_barycenter(curv, eps, n, kind),
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, eps_list))
    else:
        rows = [one(eps) for eps in eps_list]

    report = SweepReport(chart_name=chart.name, kind=kind, n=n, k=k,
                         eps=eps_list, rows=rows)
    _attach_residuals(report)
    _attach_fits(report, curv)
    _attach_checks(report, curv, thresholds or default_slope_thresholds(kind))
    return report


def _attach_residuals(rep: SweepReport) -> None:
    n = rep.n
    Vn = np.array([ball_volume(n, r.eps) for r in rep.rows])
    rep.residuals["volume"] = np.array(
        [abs(r.moments.V - r.V_pred) for r in rep.rows]) / Vn
    rep.residuals["barycenter"] = np.array(
        [float(np.linalg.norm(r.moments.s - r.s_pred)) for r in rep.rows])
    rep.residuals["tangent"] = np.array(
        [np.max(np.abs(r.eig.eigenvalues[:n] - r.prediction.tangent)) for r in rep.rows]) / Vn
    rep.residuals["normal"] = np.array(
        [np.max(np.abs(r.eig.eigenvalues[n:] - r.prediction.normal), initial=0.0)
         for r in rep.rows]) / Vn
    for name, res in rep.residuals.items():
        rep.slopes[name] = loglog_slope(rep.eps, res, floor=NOISE_FLOOR)[0]


def _attach_fits(rep: SweepReport, curv) -> None:
    """Reference expansion fits used in summaries: the eps^2 volume
    coefficient and the eps^4 coefficient of each eigenvalue over V_n."""
    n = rep.n
    Vn = np.array([ball_volume(n, r.eps) for r in rep.rows])
    V = np.array([r.moments.V for r in rep.rows])
    try:
        rep.fits["volume_c2"] = fit_expansion(
            list(zip(rep.eps, V / Vn - 1.0)), powers=[2, 4], noise_floor=NOISE_FLOOR)
    except FitError:
        pass
    lam_t = np.stack([r.eig.eigenvalues[:n] for r in rep.rows]) / Vn[:, None]
    powers = [2, 4, 6]
    for mu in range(n):
        try:
            rep.fits[f"tangent_{mu}_c4"] = fit_expansion(
                list(zip(rep.eps, lam_t[:, mu])), powers=powers, noise_floor=NOISE_FLOOR)
        except FitError:
            pass
    if rep.k:
        lam_n = np.stack([r.eig.eigenvalues[n:] for r in rep.rows]) / Vn[:, None]
        for j in range(rep.k):
            try:
                rep.fits[f"normal_{j}_c4"] = fit_expansion(
                    list(zip(rep.eps, lam_n[:, j])), powers=[4, 6], noise_floor=NOISE_FLOOR)
            except FitError:
                pass


def _attach_checks(rep: SweepReport, curv, thresholds: dict[str, float]) -> None:
    for name, min_slope in thresholds.items():
        res = rep.residuals[name]
        slope = rep.slopes[name]
        if np.all(res <= NOISE_FLOOR):
            rep.checks.append(CheckResult(
                name=f"{name}-slope", passed=True,
                detail=f"residuals at noise floor (max {res.max():.2e})"))
            continue
        rep.checks.append(CheckResult(
            name=f"{name}-slope", passed=bool(slope >= min_slope),
            detail=f"slope {slope:.2f} (threshold {min_slope})"))

    # barycenter tail: normal part / eps^2 -> H / (2(n+2))
    tail = rep.rows[-1]
    target = curv.H / (2.0 * (rep.n + 2))
    got = tail.moments.s[rep.n:] / tail.eps**2
    Hnorm = float(np.linalg.norm(target))
    if Hnorm > 1e-8:
        err = float(np.linalg.norm(got - target)) / Hnorm
        ok = err <= 0.01
        detail = f"relative error {err:.2e} at eps={tail.eps:g}"
    else:
        err = float(np.linalg.norm(got))
        ok = err <= 1e-8
        detail = f"absolute value {err:.2e} at eps={tail.eps:g} (H = 0)"
    rep.checks.append(CheckResult(name="barycenter-tail", passed=ok, detail=detail))


# --- descriptor sweeps --------------------------------------------------------


@dataclass(frozen=True)
class DescriptorRow:
    eps: float
    report: DescriptorReport | None
    cloud: object | None       # CloudDescriptors when a point cloud was drawn
    scalars: tuple[float, float, float] | None  # (T, H^2, R) for k > 1


@dataclass
class DescriptorSweepReport:
    chart_name: str
    kind: str
    n: int
    k: int
    eps: np.ndarray
    rows: list[DescriptorRow]

    def column(self, attr: str) -> np.ndarray:
        return np.array([getattr(r.report, attr) for r in self.rows])


def run_descriptor_sweep(chart: ManifoldChart, kind: str, eps_list,
                         quad: QuadratureConfig | None = None, n_points: int = 0,
                         seed: int = 0, noise_sigma: float = 0.0,
                         threads: int = 1) -> DescriptorSweepReport:
    """Per-scale descriptor reports from quadrature, optionally alongside a
    point-cloud estimate drawn fresh at every scale."""
    eps_list = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    _eps_schedule_ok(eps_list, chart)
    quad = quad or QuadratureConfig()
    n, k = chart.n, chart.k

    def one(item) -> DescriptorRow:
        i, eps = item
        spec = DomainSpec(kind=kind, eps=eps)
        mom = domain_moments(chart, spec, quad)
        report = None
        scalars = None
        if k == 1:
            report = descriptors_from_invariants(mom, sym_eig(mom.C), eps, n, kind)
        else:
            from .predictions import normalized_curvature_scalars

            lam = sym_eig(mom.C).eigenvalues / mom.V
            scalars = normalized_curvature_scalars(lam[:n], lam[n:], eps, n, kind)
        cloud = None
        if n_points > 0:
            sample = sample_domain(chart, spec, n_points, seed=seed + i,
                                   noise_sigma=noise_sigma)
            cloud = estimate_descriptors(sample, None, eps, n, kind)
        return DescriptorRow(eps=eps, report=report, cloud=cloud, scalars=scalars)

    items = list(enumerate(eps_list))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, items))
    else:
        rows = [one(it) for it in items]
    return DescriptorSweepReport(chart_name=chart.name, kind=kind, n=n, k=k,
                                 eps=eps_list, rows=rows)


# --- CSV emission -------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _meta_lines(meta: dict) -> list[str]:
    lines = [f"# covcurv {__version__}"]
    for key, val in meta.items():
        lines.append(f"# {key} = {val}")
    return lines


def sweep_csv(rep: SweepReport, meta: dict) -> str:
    n, k = rep.n, rep.k
    cols = (["eps", "V", "V_pred", "vol_resid"]
            + [f"s_{i + 1}" for i in range(n + k)]
            + ["bary_resid"]
            + [f"lam_t_{m + 1}" for m in range(n)]
            + [f"lam_t_pred_{m + 1}" for m in range(n)]
            + [f"lam_n_{j + 1}" for j in range(k)]
            + [f"lam_n_pred_{j + 1}" for j in range(k)]
            + ["quad_error"])
    out = _meta_lines(meta) + [",".join(cols)]
    for i, r in enumerate(rep.rows):
        vals = ([r.eps, r.moments.V, r.V_pred, rep.residuals["volume"][i]]
                + list(r.moments.s)
                + [rep.residuals["barycenter"][i]]
                + list(r.eig.eigenvalues[:n]) + list(r.prediction.tangent)
                + list(r.eig.eigenvalues[n:]) + list(r.prediction.normal)
                + [r.moments.quad_error])
        out.append(",".join(_fmt(v) for v in vals))
    for name, slope in rep.slopes.items():
        out.append(f"# slope {name} = {slope:.6g}")
    for check in rep.checks:
        out.append(f"# check {check.name}: {'PASS' if check.passed else 'FAIL'} ({check.detail})")
    return "\n".join(out) + "\n"


def descriptor_csv(rep: DescriptorSweepReport, meta: dict) -> str:
    n = rep.n
    kappa_name = "kappa" if rep.kind == "spherical" else "kappa_sq"
    cols = ["eps"]
    if rep.k == 1:
        cols += ["R_est", "H_est", "sign"] + [f"{kappa_name}_{m + 1}" for m in range(n)]
    else:
        cols += ["trIII_est", "H_sq_est", "R_est"]
    has_cloud = any(r.cloud is not None for r in rep.rows)
    if has_cloud:
        if rep.k == 1:
            cols += ["pc_R_est", "pc_H_est"] + [f"pc_{kappa_name}_{m + 1}" for m in range(n)]
        else:
            cols += ["pc_trIII_est", "pc_H_sq_est", "pc_R_est"]
    out = _meta_lines(meta) + [",".join(cols)]
    for r in rep.rows:
        vals: list[float] = [r.eps]
        if rep.k == 1:
            rr = r.report
            vals += [rr.scalar_curvature, rr.mean_curvature, rr.orientation_sign]
            vals += list(rr.principal_values)
        else:
            vals += list(r.scalars)
        if has_cloud:
            c = r.cloud
            if rep.k == 1:
                vals += [c.report.scalar_curvature, c.report.mean_curvature]
                vals += list(c.report.principal_values)
            else:
                vals += [c.trace_III, c.mean_curvature_sq, c.scalar_curvature]
        out.append(",".join(_fmt(v) for v in vals))
    return "\n".join(out) + "\n"
