"""Figure rendering for sweep and descriptor reports.

Each report CSV gets companion PNGs next to it: log-log residual
convergence for sweeps, descriptor-vs-scale traces for descriptor runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sweeps import DescriptorSweepReport, SweepReport


def plot_sweep(rep: SweepReport, stem: str) -> list[str]:
    """Render residual-convergence figures; returns written paths."""
    written = []
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for name, res in rep.residuals.items():
        shown = np.maximum(res, 1e-18)
        ax.loglog(rep.eps, shown, marker="o", label=f"{name} (slope {rep.slopes[name]:.2f})")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("residual")
    ax.set_title(f"{rep.chart_name}, {rep.kind}: quadrature vs. prediction")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    path = f"{stem}_residuals.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    n = rep.n
    Vn = np.array([row.moments.V for row in rep.rows])
    lam = np.stack([row.eig.eigenvalues for row in rep.rows])
    for mu in range(n):
        ax.loglog(rep.eps, lam[:, mu], marker="o", label=f"tangent {mu + 1}")
    for j in range(rep.k):
        ax.loglog(rep.eps, np.abs(lam[:, n + j]), marker="s", label=f"normal {j + 1}")
    ax.loglog(rep.eps, Vn, ls="--", color="gray", label="V")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("covariance eigenvalues")
    ax.set_title(f"{rep.chart_name}, {rep.kind}: spectrum scaling")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    path = f"{stem}_spectrum.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def plot_descriptors(rep: DescriptorSweepReport, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if rep.k == 1:
        kappa = np.stack([row.report.principal_values for row in rep.rows])
        for mu in range(rep.n):
            label = (r"$\kappa_{%d}$" if rep.kind == "spherical" else r"$\kappa^2_{%d}$") % (mu + 1)
            ax.plot(rep.eps, kappa[:, mu], marker="o", label=label)
        ax.plot(rep.eps, [row.report.scalar_curvature for row in rep.rows],
                marker="^", label="scalar curvature")
        if any(row.cloud is not None for row in rep.rows):
            pc = np.stack([row.cloud.report.principal_values for row in rep.rows])
            for mu in range(rep.n):
                ax.plot(rep.eps, pc[:, mu], ls=":", marker="x", label=f"cloud {mu + 1}")
    else:
        scal = np.array([row.scalars for row in rep.rows])
        for i, name in enumerate(("tr III", r"$|H|^2$", "scalar")):
            ax.plot(rep.eps, scal[:, i], marker="o", label=name)
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel("descriptor value")
    ax.set_title(f"{rep.chart_name}, {rep.kind}: descriptors at scale")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    path = f"{stem}_descriptors.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
