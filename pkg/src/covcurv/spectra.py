"""Symmetric eigensolver, block-perturbation predictions, expansion fits.

The eigensolver is a cyclic Jacobi iteration: matrices here are tiny
(<= ~12) and Jacobi keeps high relative accuracy on the small eigenvalues
that carry the eps^4-scale normal spectrum.  It accepts stacked inputs
(..., m, m), rotating the whole batch with one set of vectorized updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, SpectralError

_ASYM_TOL = 1e-10
_TIE_TOL = 1e-12
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending with orthonormal column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def m(self) -> int:
        return self.eigenvalues.size


def _jacobi_rotate_all(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """One (p, q) rotation applied across the whole batch in place."""
    apq = A[:, p, q]
    app = A[:, p, p]
    aqq = A[:, q, q]
    scale = np.maximum(np.abs(app), np.abs(aqq)) + 1.0
    active = np.abs(apq) > 1e-300 * scale
    theta = np.zeros_like(apq)
    np.divide(aqq - app, 2.0 * apq, out=theta, where=active)
    abs_theta = np.abs(theta)
    clipped = np.clip(theta, -1e10, 1e10)
    t_small = np.sign(theta + (theta == 0)) / (abs_theta + np.sqrt(1.0 + clipped**2))
    with np.errstate(divide="ignore"):
        t_large = 1.0 / (2.0 * theta)
    t = np.where(active, np.where(abs_theta > 1e10, t_large, t_small), 0.0)
    c = 1.0 / np.sqrt(1.0 + t**2)
    s = t * c

    rp = A[:, p, :].copy()
    rq = A[:, q, :].copy()
    A[:, p, :] = c[:, None] * rp - s[:, None] * rq
    A[:, q, :] = s[:, None] * rp + c[:, None] * rq
    cp = A[:, :, p].copy()
    cq = A[:, :, q].copy()
    A[:, :, p] = c[:, None] * cp - s[:, None] * cq
    A[:, :, q] = s[:, None] * cp + c[:, None] * cq
    A[:, p, q] = 0.0
    A[:, q, p] = 0.0

    vp = V[:, :, p].copy()
    vq = V[:, :, q].copy()
    V[:, :, p] = c[:, None] * vp - s[:, None] * vq
    V[:, :, q] = s[:, None] * vp + c[:, None] * vq


def jacobi_eigh(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of symmetric matrices.

    Accepts (m, m) or a stack (..., m, m); returns raw (unsorted)
    eigenvalues and eigenvector columns.
    """
    M = np.asarray(M, dtype=float)
    single = M.ndim == 2
    A = M[None].copy() if single else M.reshape(-1, M.shape[-2], M.shape[-1]).copy()
    b, m, _ = A.shape
    V = np.broadcast_to(np.eye(m), (b, m, m)).copy()
    if m > 1:
        norm = np.linalg.norm(A, axis=(1, 2))
        tol = m * np.finfo(float).eps * np.maximum(norm, 1e-300)
        off_mask = 1.0 - np.eye(m)
        for _ in range(_MAX_SWEEPS):
            off = np.linalg.norm(A * off_mask, axis=(1, 2))
            if np.all(off <= tol):
                break
            for p in range(m - 1):
                for q in range(p + 1, m):
                    _jacobi_rotate_all(A, V, p, q)
        else:
            off = np.linalg.norm(A * off_mask, axis=(1, 2))
            if np.any(off > 1e3 * tol):
                raise SpectralError("Jacobi iteration did not converge")
    vals = np.diagonal(A, axis1=1, axis2=2).copy()
    if single:
        return vals[0], V[0]
    shape = M.shape[:-2]
    return vals.reshape(shape + (m,)), V.reshape(shape + (m, m))


def _canonical_order(vals: np.ndarray, vecs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues; sign fixed (largest-|entry| positive); ties
    broken by lexicographic order of the sign-fixed eigenvectors."""
    m = vals.size
    for i in range(m):
        v = vecs[:, i]
        j = int(np.argmax(np.abs(v)))
        if v[j] < 0:
            vecs[:, i] = -v
    order = list(np.argsort(-vals, kind="stable"))
    scale = max(1.0, float(np.max(np.abs(vals))))
    i = 0
    while i < m:
        j = i
        while j + 1 < m and abs(vals[order[j + 1]] - vals[order[i]]) <= _TIE_TOL * scale:
            j += 1
        if j > i:
            order[i : j + 1] = sorted(order[i : j + 1], key=lambda c: tuple(-vecs[:, c]))
        i = j + 1
    return vals[order], vecs[:, order]


def sym_eig(M: np.ndarray) -> EigenDecomposition:
    """Full spectrum of a symmetric matrix via cyclic Jacobi rotations."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T)))
    if asym > _ASYM_TOL * scale:
        raise SpectralError(f"matrix asymmetric by {asym:.3e} (tolerance {_ASYM_TOL:.0e})")
    vals, vecs = jacobi_eigh(0.5 * (M + M.T))
    vals, vecs = _canonical_order(vals, vecs.copy())
    return EigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


# --- two-scale block perturbation -------------------------------------------


@dataclass(frozen=True)
class PerturbationPrediction:
    """eps^2 and eps^4 eigenvalue coefficients with limit eigenvectors."""

    lam2: np.ndarray          # (n + k,): a for the first n, 0 for the last k
    lam4: np.ndarray          # (n + k,): eig(A) desc then eig(Gamma) desc
    vectors: np.ndarray       # (n + k, n + k) limit eigenvectors, zero padded

    def eigenvalues(self, eps: float) -> np.ndarray:
        return self.lam2 * eps**2 + self.lam4 * eps**4


def perturbation_predict(a: float, A: np.ndarray, Gamma: np.ndarray,
                         B: np.ndarray | None = None) -> PerturbationPrediction:
    """Two-term spectrum of C(eps) = eps^2 diag(a I_n, 0) + eps^4 blocks.

    The first n eigenvalues are a eps^2 + eig(A) eps^4, the last k are
    eig(Gamma) eps^4, each with O(eps^5) error; limit eigenvectors are the
    block eigenvectors padded with zeros.  The off-diagonal block B does not
    enter at this order and is accepted only so call sites can pass the full
    block data through unchanged.
    """
    if a == 0.0 or not np.isfinite(a):
        raise SpectralError(f"leading coefficient must be nonzero and finite, got a={a}")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    n, k = A.shape[0], Gamma.shape[0]
    eig_A = sym_eig(A)
    eig_G = sym_eig(Gamma)
    lam2 = np.concatenate([np.full(n, float(a)), np.zeros(k)])
    lam4 = np.concatenate([eig_A.eigenvalues, eig_G.eigenvalues])
    vectors = np.zeros((n + k, n + k))
    vectors[:n, :n] = eig_A.eigenvectors
    vectors[n:, n:] = eig_G.eigenvectors
    return PerturbationPrediction(lam2=lam2, lam4=lam4, vectors=vectors)


def assemble_block_matrix(eps: float, a: float, A: np.ndarray, B: np.ndarray,
                          Gamma: np.ndarray) -> np.ndarray:
    """The matrix eps^2 diag(a I_n, 0) + eps^4 [[A, B], [B^T, Gamma]]."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    n, k = A.shape[0], Gamma.shape[0]
    B = np.zeros((n, k)) if B is None else np.asarray(B, dtype=float).reshape(n, k)
    C = np.zeros((n + k, n + k))
    C[:n, :n] = eps**2 * a * np.eye(n) + eps**4 * A
    C[:n, n:] = eps**4 * B
    C[n:, :n] = eps**4 * B.T
    C[n:, n:] = eps**4 * Gamma
    return C


# --- asymptotic coefficient extraction ---------------------------------------


@dataclass(frozen=True)
class ExpansionFit:
    """Weighted least-squares fit value ~ sum_p c_p eps^p."""

    powers: tuple[float, ...]
    coefficients: np.ndarray
    cond: float
    eps: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    residual_slope: float       # two-point log-log slope at the largest eps
    residual_slope_lsq: float   # log-log regression over all usable points
    residual_r2: float
    noise_floor: float

    def coefficient(self, p: float) -> float:
        return float(self.coefficients[self.powers.index(p)])

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        return sum(c * eps**p for c, p in zip(self.coefficients, self.powers))


def fit_expansion(samples, powers, noise_floor: float = 1e-13) -> ExpansionFit:
    """Extract expansion coefficients from an eps sweep.

    samples: iterable of (eps, value) with eps strictly decreasing; powers:
    exponents to fit.  Rows are weighted by eps^-max(powers) so the highest
    requested order is resolved where the model is most accurate.  The
    residual order is the log-log slope of |value - fit|; residuals at or
    below noise_floor are treated as converged (slope +inf).
    """
    pairs = np.asarray(list(samples), dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("samples must be (eps, value) pairs")
    eps, vals = pairs[:, 0], pairs[:, 1]
    powers = tuple(float(p) for p in powers)
    if len(eps) < len(powers) + 2:
        raise FitError(f"need at least {len(powers) + 2} samples for {len(powers)} powers")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps must be strictly decreasing")
    if not (np.all(np.isfinite(vals)) and np.all(eps > 0)):
        raise ValueError("samples must be finite with positive eps")

    design = np.stack([eps**p for p in powers], axis=1)
    w = eps ** (-max(powers))
    Xw = design * w[:, None]
    sv = np.linalg.svd(Xw, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > 1e12:
        raise FitError(f"rank-deficient design (cond = {cond:.3e}); widen the eps range")
    coef, *_ = np.linalg.lstsq(Xw, vals * w, rcond=None)
    resid = vals - design @ coef

    slope_2pt, slope_lsq, r2 = _residual_order(eps, np.abs(resid), noise_floor)
    return ExpansionFit(
        powers=powers,
        coefficients=coef,
        cond=cond,
        eps=eps,
        residuals=resid,
        residual_slope=slope_2pt,
        residual_slope_lsq=slope_lsq,
        residual_r2=r2,
        noise_floor=noise_floor,
    )


def _residual_order(eps, res, floor):
    usable = res > floor
    if usable.sum() < 2:
        return np.inf, np.inf, 1.0
    e, r = eps[usable], res[usable]
    slope_2pt = float(np.log(r[0] / r[1]) / np.log(e[0] / e[1]))
    slope_lsq, r2 = loglog_slope(e, r)
    return slope_2pt, slope_lsq, r2


def loglog_slope(eps, values, floor: float = 0.0) -> tuple[float, float]:
    """Least-squares slope and R^2 of log|values| against log eps.

    Points at or below floor are dropped; with fewer than two usable points
    the data is considered converged to noise and the slope reported +inf.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    usable = values > floor
    if usable.sum() < 2:
        return np.inf, 1.0
    x = np.log(eps[usable])
    y = np.log(values[usable])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2
