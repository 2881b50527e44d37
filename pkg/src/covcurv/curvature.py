"""Curvature tensors of a graph manifold at its base point.

All quantities derive from the stack of Hessians kappa[j] of the graph
functions at the origin: kappa[j] is the Weingarten matrix S_j of the j-th
unit normal, the mean curvature components are H_j = tr S_j, and the Gauss
equation (flat ambient space) gives

    Ric = S_H - sum_j S_j^2,      scalar = |H|^2 - sum_j tr(S_j^2).

The rank-4 form III(x, y) acting on normal vectors has matrix entries
<S_j x, S_i y>; its normal trace is sum_j S_j^2, its tangent trace has
entries tr(S_i S_j), and the total trace is |H|^2 - scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import ManifoldChart
from .errors import ChartError

_SYM_TOL = 1e-8
_ORIGIN_TOL = 1e-8


@dataclass(frozen=True)
class SecondFundamentalForm:
    """k symmetric n x n slices kappa[j][a][b] (units 1/length)."""

    kappa: np.ndarray

    def __post_init__(self):
        kappa = np.asarray(self.kappa, dtype=float)
        if kappa.ndim != 3 or kappa.shape[1] != kappa.shape[2]:
            raise ValueError(f"kappa must be (k, n, n), got {kappa.shape}")
        skew = np.max(np.abs(kappa - np.swapaxes(kappa, 1, 2)), initial=0.0)
        if skew > _SYM_TOL:
            raise ValueError(f"kappa slices asymmetric by {skew:.3e} > {_SYM_TOL:.0e}")
        object.__setattr__(self, "kappa", 0.5 * (kappa + np.swapaxes(kappa, 1, 2)))

    @property
    def n(self) -> int:
        return self.kappa.shape[1]

    @property
    def k(self) -> int:
        return self.kappa.shape[0]


@dataclass(frozen=True)
class CurvatureSummary:
    """Curvature data entering every asymptotic prediction."""

    H: np.ndarray            # mean curvature vector, (k,)
    S_H: np.ndarray          # Weingarten matrix at H, (n, n)
    ricci_op: np.ndarray     # (n, n)
    scalar: float
    tr_perp_III: np.ndarray  # (n, n), = sum_j S_j^2
    tr_par_III: np.ndarray   # (k, k), entries tr(S_i S_j)
    tr_III: float
    ambient_scalar: float = 0.0  # flat ambient space throughout

    @property
    def n(self) -> int:
        return self.S_H.shape[0]

    @property
    def k(self) -> int:
        return self.H.shape[0]

    @property
    def H_norm_sq(self) -> float:
        return float(self.H @ self.H)


def second_fundamental_form(chart: ManifoldChart) -> SecondFundamentalForm:
    """Read the second fundamental form off the chart Hessians at 0.

    Rejects charts that are not graphs over their own tangent space,
    reporting the offending gradient norm.
    """
    origin = np.zeros((1, chart.n))
    g0 = float(np.linalg.norm(chart.jacobian(origin)))
    if g0 > _ORIGIN_TOL:
        raise ChartError(
            f"{chart.name}: gradient at origin has norm {g0:.3e} (tolerance {_ORIGIN_TOL:.0e})"
        )
    f0 = float(np.linalg.norm(chart.f(origin)))
    if f0 > _ORIGIN_TOL:
        raise ChartError(f"{chart.name}: f(0) has norm {f0:.3e} (tolerance {_ORIGIN_TOL:.0e})")
    return SecondFundamentalForm(chart.hessian_origin())


def mean_curvature(sff: SecondFundamentalForm) -> np.ndarray:
    """Mean curvature vector H_j = sum_mu kappa^j_mumu."""
    return np.trace(sff.kappa, axis1=1, axis2=2)


def curvature_summary(sff: SecondFundamentalForm) -> CurvatureSummary:
    kappa = sff.kappa
    H = mean_curvature(sff)
    S_H = np.einsum("j,jab->ab", H, kappa)
    tr_perp = np.einsum("jac,jcb->ab", kappa, kappa)
    ricci = S_H - tr_perp
    tr_par = np.einsum("iab,jab->ij", kappa, kappa)
    tr_total = float(np.trace(tr_perp))
    return CurvatureSummary(
        H=H,
        S_H=S_H,
        ricci_op=ricci,
        scalar=float(np.trace(ricci)),
        tr_perp_III=tr_perp,
        tr_par_III=tr_par,
        tr_III=tr_total,
    )


def third_form_operator(sff: SecondFundamentalForm, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix of III(x, y) on the normal space: entry (i, j) = <S_j x, S_i y>."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx = np.einsum("jab,b->ja", sff.kappa, x)  # S_j x
    sy = np.einsum("iab,b->ia", sff.kappa, y)  # S_i y
    return np.einsum("ja,ia->ij", sx, sy)


def ricci_asymmetry(sff: SecondFundamentalForm, mu: int, nu: int) -> np.ndarray:
    """Normal-connection curvature components from the asymmetry of III.

    Entry (i, j) is <III(e_mu, e_nu) n_i, n_j> - <III(e_mu, e_nu) n_j, n_i>,
    which in flat ambient space equals the normal curvature R_perp; it is
    antisymmetric in (i, j) and in (mu, nu).  Indices are 0-based.
    """
    n = sff.n
    for idx in (mu, nu):
        if not 0 <= idx < n:
            raise ValueError(f"tangent index {idx} out of range 0..{n - 1}")
    e_mu = np.eye(n)[mu]
    e_nu = np.eye(n)[nu]
    A = third_form_operator(sff, e_mu, e_nu)
    return A - A.T
