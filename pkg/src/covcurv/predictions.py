"""Closed-form asymptotic predictions and their inversion into descriptors.

Conventions.  V_n(eps) is the volume of the tangent ball, T = tr III =
|H|^2 - scalar.  With eigenvalue lists sorted descending, the two-term
covariance spectra are

  cylindrical tangent: V_n [eps^2/(n+2) + eps^4/(2(n+2)(n+4)) eig(T I + 2 tr_perp III)]
  cylindrical normal:  V_n  eps^4/(4(n+2)(n+4)) eig(H (x) H + 2 tr_par III)
  spherical tangent:   V_n [eps^2/(n+2) + eps^4/(8(n+2)(n+4)) eig((2T-|H|^2) I - 4 S_H)]
  spherical normal:    V_n  eps^4/(2(n+2)(n+4)) eig(tr_par III - H (x) H/(n+2))

and the hypersurface descriptor formulas below invert the truncated
expansions exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureSummary
from .moments import MomentSet
from .spectra import EigenDecomposition, sym_eig
from .sphere_integrals import ball_volume

Kind = str  # "cylindrical" | "spherical"

_DEGENERACY_TOL = 1e-9
_SIGN_TOL = 1e-12


def _check_kind(kind: str) -> str:
    if kind not in ("cylindrical", "spherical"):
        raise ValueError(f"unknown domain kind {kind!r}")
    return kind


def tangent_operator(curv: CurvatureSummary, kind: Kind) -> np.ndarray:
    """Operator whose spectrum carries the eps^4 term of tangent eigenvalues."""
    n = curv.n
    if _check_kind(kind) == "cylindrical":
        return curv.tr_III * np.eye(n) + 2.0 * curv.tr_perp_III
    return (2.0 * curv.tr_III - curv.H_norm_sq) * np.eye(n) - 4.0 * curv.S_H


def normal_operator(curv: CurvatureSummary, kind: Kind) -> np.ndarray:
    """Operator whose spectrum carries the leading normal eigenvalues."""
    HH = np.outer(curv.H, curv.H)
    if _check_kind(kind) == "cylindrical":
        return HH + 2.0 * curv.tr_par_III
    return curv.tr_par_III - HH / (curv.n + 2.0)


def predict_volume(curv: CurvatureSummary, eps: float, n: int, kind: Kind) -> float:
    """Two-term domain volume."""
    Vn = ball_volume(n, eps)
    if _check_kind(kind) == "cylindrical":
        return Vn * (1.0 + eps**2 * curv.tr_III / (2.0 * (n + 2)))
    return Vn * (1.0 + eps**2 * (2.0 * curv.tr_III - curv.H_norm_sq) / (8.0 * (n + 2)))


def predict_barycenter(curv: CurvatureSummary, eps: float, n: int, kind: Kind) -> np.ndarray:
    """Leading barycenter (0, eps^2 H / (2(n+2))), same for both kinds."""
    _check_kind(kind)
    return np.concatenate([np.zeros(n), eps**2 * curv.H / (2.0 * (n + 2))])


@dataclass(frozen=True)
class SpectrumPrediction:
    """Predicted covariance spectrum at one scale, plus the raw operators."""

    kind: str
    n: int
    k: int
    eps: float
    tangent: np.ndarray       # (n,) descending
    normal: np.ndarray        # (k,) descending
    vectors: np.ndarray       # (n+k, n+k) limit eigenvectors, zero padded
    tangent_op: np.ndarray
    normal_op: np.ndarray
    tangent_op_eigs: np.ndarray
    normal_op_eigs: np.ndarray

    def tangent_series_coeffs(self) -> tuple[float, np.ndarray]:
        """(c2, c4 array) of lambda_mu / V_n = c2 eps^2 + c4_mu eps^4 + ..."""
        n = self.n
        denom = 8.0 if self.kind == "spherical" else 2.0
        return 1.0 / (n + 2), self.tangent_op_eigs / (denom * (n + 2) * (n + 4))

    def normal_series_coeffs(self) -> np.ndarray:
        """c4 array of lambda_j / V_n = c4_j eps^4 + ..."""
        n = self.n
        denom = 2.0 if self.kind == "spherical" else 4.0
        return self.normal_op_eigs / (denom * (n + 2) * (n + 4))


def predict_eigenvalues(curv: CurvatureSummary, eps: float, n: int, k: int,
                        kind: Kind) -> SpectrumPrediction:
    """Two-term covariance eigenvalues and limit eigenvectors."""
    _check_kind(kind)
    Vn = ball_volume(n, eps)
    T_op = tangent_operator(curv, kind)
    N_op = normal_operator(curv, kind)
    eig_t = sym_eig(T_op)
    eig_n = sym_eig(N_op)
    c2, c4 = 1.0 / (n + 2), eig_t.eigenvalues
    if kind == "cylindrical":
        tangent = Vn * (c2 * eps**2 + eps**4 * c4 / (2.0 * (n + 2) * (n + 4)))
        normal = Vn * eps**4 * eig_n.eigenvalues / (4.0 * (n + 2) * (n + 4))
    else:
        tangent = Vn * (c2 * eps**2 + eps**4 * c4 / (8.0 * (n + 2) * (n + 4)))
        normal = Vn * eps**4 * eig_n.eigenvalues / (2.0 * (n + 2) * (n + 4))
    vectors = np.zeros((n + k, n + k))
    vectors[:n, :n] = eig_t.eigenvectors
    vectors[n:, n:] = eig_n.eigenvectors
    return SpectrumPrediction(
        kind=kind, n=n, k=k, eps=eps, tangent=tangent, normal=normal, vectors=vectors,
        tangent_op=T_op, normal_op=N_op,
        tangent_op_eigs=eig_t.eigenvalues, normal_op_eigs=eig_n.eigenvalues,
    )


def predict_generic_cyl_eigs(semi_axes, eps: float, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading tangent eigenvalues over a generic transversal plane.

    lambda_mu = eps^(n+2) ell_mu^2 V_n(1) prod(ell) / (n+2); the k normal
    eigenvalues vanish at this order.
    """
    ell = np.asarray(semi_axes, dtype=float)
    if np.any(ell <= 0):
        raise ValueError("semi-axes must be positive")
    lead = eps ** (n + 2) * ball_volume(n, 1.0) * np.prod(ell) / (n + 2)
    return lead * ell**2, np.zeros(k)


def predict_ratio_limits(curv: CurvatureSummary, n: int, kind: Kind):
    """Scale-free eigenvalue ratio limits.

    Returns (pair_limits, normal_sum_limit) where pair_limits[mu, nu] is the
    limit of V_n (lam_mu - lam_nu) / (lam_mu lam_nu) and normal_sum_limit the
    limit of V_n sum_j lam_j / (lam_mu lam_nu).  Tangent indices are aligned
    with ASCENDING eigenvalues of the driver operator (tr_perp III for
    cylinders, S_H for spheres); empirical sequences must order their
    tangent eigenvalues the same way (see `empirical_ratios`).
    """
    if _check_kind(kind) == "cylindrical":
        drv = np.sort(np.linalg.eigvalsh(curv.tr_perp_III))
        pair = (n + 2.0) / (n + 4.0) * (drv[:, None] - drv[None, :])
        normal_sum = (n + 2.0) * (curv.H_norm_sq + 2.0 * curv.tr_III) / (4.0 * (n + 4.0))
    else:
        drv = np.sort(np.linalg.eigvalsh(curv.S_H))
        pair = (n + 2.0) / (2.0 * (n + 4.0)) * (drv[None, :] - drv[:, None])
        normal_sum = (n + 2.0) * (curv.tr_III - curv.H_norm_sq / (n + 2.0)) / (2.0 * (n + 4.0))
    return pair, float(normal_sum)


def empirical_ratios(eig: EigenDecomposition, n: int, eps: float, kind: Kind):
    """Finite-scale counterparts of predict_ratio_limits from a covariance
    spectrum (all n+k eigenvalues, descending)."""
    Vn = ball_volume(n, eps)
    lam_t = eig.eigenvalues[:n]
    lam_n = eig.eigenvalues[n:]
    # ascending driver eigenvalue <-> ascending covariance for cylinders,
    # descending covariance for spheres (the spherical operator is -4 S_H)
    lam = np.sort(lam_t) if _check_kind(kind) == "cylindrical" else np.sort(lam_t)[::-1]
    pair = Vn * (lam[:, None] - lam[None, :]) / (lam[:, None] * lam[None, :])
    denom = lam[0] * lam[min(1, n - 1)]
    normal_sum = float(Vn * np.sum(lam_n) / denom)
    return pair, normal_sum


def curve_curvature_average(curv: CurvatureSummary, eps: float, n: int) -> float:
    """Ball average of summed squared first curvatures of geodesics,
    (3 |H|^2 - 2 scalar) eps^4 / ((n+2)(n+4))."""
    return (3.0 * curv.H_norm_sq - 2.0 * curv.scalar) * eps**4 / ((n + 2.0) * (n + 4.0))


# --- hypersurface descriptors (k = 1) ----------------------------------------


@dataclass(frozen=True)
class DescriptorReport:
    """Curvature descriptors at one scale, inverted from integral invariants."""

    kind: str
    eps: float
    n: int
    scalar_curvature: float
    mean_curvature: float          # signed when the orientation is determined
    orientation_sign: int          # +1 / -1 / 0 (undetermined)
    principal_values: np.ndarray   # kappa_mu (spherical) or kappa_mu^2 (cylindrical)
    principal_directions: np.ndarray  # (n+1, n) eigenvector columns
    normal_directions: np.ndarray     # (n+1, 1)
    truncation_order: str
    flags: tuple[str, ...] = ()


def _orientation_sign(normal_vec: np.ndarray, s: np.ndarray) -> int:
    dot = float(normal_vec @ s)
    if abs(dot) < _SIGN_TOL * max(np.linalg.norm(s), 1e-300):
        return 0
    return 1 if dot > 0 else -1


def descriptors_from_invariants(moments: MomentSet, eig: EigenDecomposition, eps: float,
                                n: int, kind: Kind) -> DescriptorReport:
    """Invert the truncated expansions of a hypersurface domain.

    Spherical reports carry signed kappa_mu with O(eps) error; cylindrical
    reports carry kappa_mu^2 with O(eps^2) error.  The overall sign comes
    from sgn <e_{n+1}, s>; a negative mean-curvature-squared radicand (noise
    or eps too large) and near-zero H in the spherical kappa division are
    flagged rather than fatal.
    """
    _check_kind(kind)
    if eig.m != n + 1:
        raise ValueError("descriptor inversion is defined for hypersurfaces (k = 1)")
    expected_ref = "barycenter" if kind == "spherical" else "center"
    if moments.reference != expected_ref:
        raise ValueError(f"{kind} descriptors need covariance about the {expected_ref}")

    Vn = ball_volume(n, eps)
    vr = moments.V / Vn
    lam_t = eig.eigenvalues[:n] / Vn
    lam_nrm = float(eig.eigenvalues[n]) / Vn
    normal_vec = eig.eigenvectors[:, n]
    flags: list[str] = []

    if kind == "spherical":
        R_est = (
            2.0 * (n + 2) ** 2 * (n + 4) * lam_nrm / (n * eps**4)
            - 8.0 * (n + 1) * (n + 2) / (n * eps**2) * (vr - 1.0)
        )
        H_sq = (
            4.0 * (n + 2) ** 2 * (n + 4) * lam_nrm / (n * eps**4)
            + 8.0 * (n + 2) ** 2 / (n * eps**2) * (1.0 - vr)
        )
        order = "O(eps)"
    else:
        R_est = 2.0 * (n + 2) / eps**2 * (
            2.0 * (n + 4) / eps**2 * lam_nrm + 3.0 * (1.0 - vr)
        )
        H_sq = 2.0 * (n + 2) / eps**2 * (
            2.0 * (n + 4) / eps**2 * lam_nrm + 2.0 * (1.0 - vr)
        )
        order = "O(eps^2)"

    sign = _orientation_sign(normal_vec, moments.s)
    if sign == 0:
        flags.append("orientation-undetermined")
    if H_sq < 0:
        flags.append("negative-H-squared")
        H_mag = 0.0
    else:
        H_mag = float(np.sqrt(H_sq))
    H_signed = (sign if sign else 1) * H_mag

    if kind == "spherical":
        if H_mag < 1e-10:
            flags.append("H-near-zero-kappa-omitted")
            principal = np.full(n, np.nan)
        else:
            principal = (
                2.0 * (n + 2) / (eps**2 * H_signed)
                * (vr + (n + 4) / eps**2 * (eps**2 / (n + 2) - lam_t) - 1.0)
            )
    else:
        principal = (n + 2) / eps**2 * (
            (n + 4) / eps**2 * (lam_t - eps**2 / (n + 2)) - vr + 1.0
        )

    return DescriptorReport(
        kind=kind, eps=eps, n=n,
        scalar_curvature=float(R_est),
        mean_curvature=float(H_signed) if sign else float(H_mag),
        orientation_sign=sign,
        principal_values=principal,
        principal_directions=eig.eigenvectors[:, :n],
        normal_directions=eig.eigenvectors[:, n:],
        truncation_order=order,
        flags=tuple(flags),
    )


# --- probability-normalized inversion (point-cloud path) ---------------------
#
# Sample moments only determine invariants per unit measure (lam_hat =
# lam / V_domain), so the volume-ratio channel of the corollaries is not
# observable.  Re-inverting the normalized expansions gives, with
# m_mu built from the tangent deviations and g from the normal eigenvalues,
# closed forms for T = tr III, |H|^2 and the scalar curvature that hold in
# any codimension; for k = 1 the per-direction kappa follow.


def normalized_curvature_scalars(lam_hat_t, lam_hat_n, eps: float, n: int, kind: Kind):
    """(T, |H|^2, scalar) from probability-normalized covariance eigenvalues."""
    lam_hat_t = np.asarray(lam_hat_t, dtype=float)
    lam_hat_n = np.asarray(lam_hat_n, dtype=float)
    dev = lam_hat_t - eps**2 / (n + 2)
    if _check_kind(kind) == "cylindrical":
        m = (n + 2) * (n + 4) * dev / eps**4
        T = (n + 2) / 2.0 * float(np.sum(m))
        g = 4.0 * (n + 2) * (n + 4) * float(np.sum(lam_hat_n)) / eps**4
        H_sq = g - 2.0 * T
    else:
        m = 8.0 * (n + 2) * (n + 4) * dev / eps**4
        g = 2.0 * (n + 2) * (n + 4) * float(np.sum(lam_hat_n)) / eps**4
        H_sq = -(n + 2) * ((n + 2) * float(np.sum(m)) + 4.0 * n * g) / (
            2.0 * (n**2 + 8.0 * n + 8.0)
        )
        T = g + H_sq / (n + 2)
    return T, H_sq, H_sq - T


def normalized_principal_values(lam_hat_t, T: float, H_sq: float, H_signed: float,
                                eps: float, n: int, kind: Kind):
    """Per-direction kappa (spherical, signed) or kappa^2 (cylindrical) for
    k = 1, from normalized tangent eigenvalues plus the recovered scalars."""
    lam_hat_t = np.asarray(lam_hat_t, dtype=float)
    dev = lam_hat_t - eps**2 / (n + 2)
    if _check_kind(kind) == "cylindrical":
        m = (n + 2) * (n + 4) * dev / eps**4
        return m + T / (n + 2)
    m = 8.0 * (n + 2) * (n + 4) * dev / eps**4
    if abs(H_signed) < 1e-10:
        return np.full(lam_hat_t.size, np.nan)
    return -(m + 2.0 * (2.0 * T - H_sq) / (n + 2)) / (4.0 * H_signed)
