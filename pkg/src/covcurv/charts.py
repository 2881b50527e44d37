"""Graph charts of embedded submanifolds and the manifold zoo.

A chart represents an n-manifold in R^(n+k) as x -> (x, f(x)) over its own
tangent space at the base point: f(0) = 0 and grad f(0) = 0, so the
coordinate frame is orthonormal at the origin.  Evaluators are batched:
``f`` maps (m, n) -> (m, k) and ``jac`` maps (m, n) -> (m, k, n).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ChartError

# Central-difference steps.  cbrt(eps) is the first-derivative optimum and is
# also used for Hessians taken as differences of an analytic gradient; bare-f
# second differences need the flatter eps**(1/4) to stay below round-off.
FD_STEP_GRAD = float(np.cbrt(np.finfo(float).eps))
FD_STEP_HESS = float(np.finfo(float).eps ** 0.25)

_ORIGIN_TOL = 1e-8


@dataclass(frozen=True)
class ManifoldChart:
    """Graph representation of an n-manifold of codimension k.

    fun/jac take batches of tangent coordinates; jac=None means central
    finite differences of fun.  hess0 is the stack of k Hessians of the
    graph functions at the origin (None: finite differences, mode
    'finite-difference').
    """

    n: int
    k: int
    fun: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    hess0: np.ndarray | None = None
    name: str = "chart"
    # validity ceiling is ceiling_scale / max |kappa|; 0.5 is the safe default,
    # globally single-valued polynomial graphs can afford 1.0
    ceiling_scale: float = 0.5
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ChartError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        origin = np.zeros((1, self.n))
        f0 = np.linalg.norm(self.f(origin))
        if f0 > _ORIGIN_TOL:
            raise ChartError(f"{self.name}: |f(0)| = {f0:.3e} exceeds {_ORIGIN_TOL:.0e}")
        g0 = np.linalg.norm(self.jacobian(origin))
        if g0 > _ORIGIN_TOL:
            raise ChartError(f"{self.name}: |grad f(0)| = {g0:.3e} exceeds {_ORIGIN_TOL:.0e}")

    @property
    def hessian_mode(self) -> str:
        return "analytic" if self.hess0 is not None else "finite-difference"

    @property
    def ambient_dim(self) -> int:
        return self.n + self.k

    def f(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.asarray(self.fun(x), dtype=float).reshape(x.shape[0], self.k)
        return out

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """Jacobian J[i, j, mu] = d f^j / d x^mu at each batch point."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float).reshape(x.shape[0], self.k, self.n)
        return self._fd_jacobian(x)

    def _fd_jacobian(self, x: np.ndarray) -> np.ndarray:
        m = x.shape[0]
        h = FD_STEP_GRAD * max(1.0, float(np.abs(x).max(initial=0.0)))
        out = np.empty((m, self.k, self.n))
        for mu in range(self.n):
            step = np.zeros(self.n)
            step[mu] = h
            out[:, :, mu] = (self.f(x + step) - self.f(x - step)) / (2.0 * h)
        return out

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Ambient points (x, f(x)) with shape (m, n+k)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.hstack([x, self.f(x)])

    def hessian_origin(self) -> np.ndarray:
        """Stack of k symmetric Hessians of f at 0, shape (k, n, n)."""
        if "hess" in self._cache:
            return self._cache["hess"]
        if self.hess0 is not None:
            H = np.asarray(self.hess0, dtype=float).reshape(self.k, self.n, self.n)
        elif self.jac is not None:
            H = self._fd_hessian_from_jacobian()
        else:
            H = self._fd_hessian_from_f()
        H = 0.5 * (H + np.swapaxes(H, 1, 2))
        self._cache["hess"] = H
        return H

    def _fd_hessian_from_jacobian(self) -> np.ndarray:
        h = FD_STEP_GRAD
        H = np.empty((self.k, self.n, self.n))
        for mu in range(self.n):
            step = np.zeros((1, self.n))
            step[0, mu] = h
            H[:, :, mu] = (self.jacobian(step)[0] - self.jacobian(-step)[0]) / (2.0 * h)
        return H

    def _fd_hessian_from_f(self) -> np.ndarray:
        h = FD_STEP_HESS
        H = np.empty((self.k, self.n, self.n))
        f0 = self.f(np.zeros((1, self.n)))[0]
        for mu in range(self.n):
            emu = np.zeros(self.n)
            emu[mu] = h
            H[:, mu, mu] = (self.f(emu[None]) - 2 * f0 + self.f(-emu[None]))[0] / h**2
            for nu in range(mu + 1, self.n):
                enu = np.zeros(self.n)
                enu[nu] = h
                val = (
                    self.f((emu + enu)[None])
                    - self.f((emu - enu)[None])
                    - self.f((enu - emu)[None])
                    + self.f((-emu - enu)[None])
                )[0] / (4.0 * h**2)
                H[:, mu, nu] = val
                H[:, nu, mu] = val
        return H

    def sqrt_det_g(self, x: np.ndarray) -> np.ndarray:
        """Exact induced measure density sqrt(det(I + J^T J)) via the Gram
        determinant det(I_k + J J^T) of the smaller k x k block."""
        J = self.jacobian(x)
        G = np.eye(self.k) + np.einsum("mia,mja->mij", J, J)
        return np.sqrt(np.linalg.det(G))

    def eps_max(self) -> float:
        """Validity ceiling keeping the graph single-valued over the domain."""
        if "eps_max" in self._cache:
            return self._cache["eps_max"]
        H = self.hessian_origin()
        radius = max(
            (float(np.max(np.abs(np.linalg.eigvalsh(H[j])))) for j in range(self.k)),
            default=0.0,
        )
        out = math.inf if radius < 1e-14 else self.ceiling_scale / radius
        self._cache["eps_max"] = out
        return out


# --- zoo -------------------------------------------------------------------


def plane_chart(n: int = 2, k: int = 1) -> ManifoldChart:
    return ManifoldChart(
        n=n,
        k=k,
        fun=lambda x: np.zeros((x.shape[0], k)),
        jac=lambda x: np.zeros((x.shape[0], k, n)),
        hess0=np.zeros((k, n, n)),
        name=f"plane({n},{k})",
    )


def paraboloid_chart(*coeffs: float) -> ManifoldChart:
    """Hypersurface graph f = (a_1 x_1^2 + ... + a_n x_n^2) / 2."""
    a = np.asarray(coeffs, dtype=float)
    n = a.size
    return ManifoldChart(
        n=n,
        k=1,
        fun=lambda x: 0.5 * (x**2 @ a)[:, None],
        jac=lambda x: (a * x)[:, None, :],
        hess0=np.diag(a)[None],
        name="paraboloid(" + ",".join(f"{c:g}" for c in a) + ")",
        ceiling_scale=1.0,
    )


def sphere_chart(radius: float = 1.0, n: int = 2) -> ManifoldChart:
    """Lower cap of the n-sphere of given radius: f = R - sqrt(R^2 - |x|^2)."""
    if radius <= 0:
        raise ChartError(f"sphere radius must be positive, got {radius}")
    R = float(radius)

    def fun(x):
        r2 = np.sum(x**2, axis=1)
        if np.any(r2 >= R**2):
            raise ChartError(f"sphere({R:g},{n}) evaluated outside its chart")
        return (R - np.sqrt(R**2 - r2))[:, None]

    def jac(x):
        r2 = np.sum(x**2, axis=1)
        return (x / np.sqrt(R**2 - r2)[:, None])[:, None, :]

    return ManifoldChart(
        n=n, k=1, fun=fun, jac=jac, hess0=(np.eye(n) / R)[None], name=f"sphere({R:g},{n})"
    )


def quadratic_chart(hessians, name: str | None = None) -> ManifoldChart:
    """Codimension-k graph with f^j = x^T H_j x / 2 for symmetric H_j."""
    H = np.asarray(hessians, dtype=float)
    if H.ndim == 2:
        H = H[None]
    k, n = H.shape[0], H.shape[1]
    if H.shape != (k, n, n):
        raise ChartError(f"hessian stack must be (k, n, n), got {H.shape}")
    if np.max(np.abs(H - np.swapaxes(H, 1, 2))) > 1e-10:
        raise ChartError("quadratic chart Hessians must be symmetric")
    return ManifoldChart(
        n=n,
        k=k,
        fun=lambda x: 0.5 * np.einsum("jab,ma,mb->mj", H, x, x),
        jac=lambda x: np.einsum("jab,mb->mja", H, x),
        hess0=H,
        name=name or f"quadratic(k={k},n={n})",
        ceiling_scale=1.0,
    )


def saddle_codim2_chart() -> ManifoldChart:
    """The standard codimension-2 example f1 = (x^2-y^2)/2, f2 = xy."""
    return quadratic_chart(
        [[[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [1.0, 0.0]]], name="saddle-codim2"
    )


_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "pi": np.pi, "cosh": np.cosh, "sinh": np.sinh,
    "tanh": np.tanh, "arctan": np.arctan,
}


def expr_chart(n: int, exprs: list[str], name: str | None = None) -> ManifoldChart:
    """Expression-defined graph functions of x1..xn, differentiated by FD."""
    compiled = [compile(e, "<graph-expr>", "eval") for e in exprs]

    def fun(x):
        env = {f"x{i + 1}": x[:, i] for i in range(n)}
        env.update(_EXPR_NAMES)
        cols = [np.broadcast_to(np.asarray(eval(c, {"__builtins__": {}}, env), dtype=float),
                                x.shape[0]) for c in compiled]
        return np.stack(cols, axis=1)

    return ManifoldChart(n=n, k=len(exprs), fun=fun, name=name or "graph-expr")


_ZOO_RE = re.compile(r"^([a-zA-Z-]+)\s*(?:\((.*)\))?$")


def chart_from_id(ident: str) -> ManifoldChart:
    """Parse a manifold zoo identifier.

    plane | plane(n,k) | paraboloid(a1,...,an) | sphere(R,n) |
    quadratic(k, <k*n*n entries row-major>) | saddle-codim2 |
    graph-expr(n; expr1; expr2; ...)
    """
    m = _ZOO_RE.match(ident.strip())
    if not m:
        raise ChartError(f"cannot parse manifold id {ident!r}")
    head, args = m.group(1), m.group(2)
    if head == "plane":
        vals = [int(v) for v in args.split(",")] if args else [2, 1]
        return plane_chart(*vals)
    if head == "paraboloid":
        return paraboloid_chart(*[float(v) for v in args.split(",")])
    if head == "sphere":
        vals = args.split(",") if args else ["1", "2"]
        return sphere_chart(float(vals[0]), int(vals[1]) if len(vals) > 1 else 2)
    if head == "quadratic":
        vals = [float(v) for v in args.split(",")]
        k = int(vals[0])
        flat = np.asarray(vals[1:])
        if flat.size % k:
            raise ChartError("quadratic(k, ...) needs k*n*n matrix entries")
        n = int(round(math.sqrt(flat.size / k)))
        if k * n * n != flat.size:
            raise ChartError("quadratic(k, ...) needs k*n*n matrix entries")
        return quadratic_chart(flat.reshape(k, n, n), name=ident.strip())
    if head == "saddle-codim2":
        return saddle_codim2_chart()
    if head == "graph-expr":
        parts = [p.strip() for p in args.split(";")]
        n = int(parts[0].replace("n=", ""))
        return expr_chart(n, parts[1:], name=ident.strip())
    raise ChartError(f"unknown manifold id {ident!r}")
