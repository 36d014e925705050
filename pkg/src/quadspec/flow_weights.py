"""Flow averages, the quadratic escape weight and the deformed symbol.

For a quadratic form q the Hamilton flow of Im q is linear, X_t = E(t) X with
E(t) = exp(2t Im F), so every object here is a real symmetric matrix built
from the integrand W(t) = E(t)^T (Re Q) E(t):

    average      A = (1/T) int_0^T W(t) dt
    weight       G = int_0^T (1 - t/T) W(t) dt

The weight comes from the piecewise affine kernel J(t) = -(1 + t) on [-1, 0)
(zero elsewhere), which solves J' = delta_0 - 1_[-1,0]; substituting it in
G(X) = -int J(-t/T) Re q(X_t) dt gives the (1 - t/T) profile above.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize

from .errors import QuadratureNoConvergence
from .symplectic import QuadraticForm, hamilton_map, sigma_matrix

__all__ = [
    "FlowAverage",
    "QuadraticWeight",
    "DeformedForm",
    "flow_average",
    "average_min_eig",
    "weight_go",
    "check_escape_identity",
    "deform",
    "ellipticity_radius",
    "gauss_legendre",
]


@dataclass(frozen=True)
class FlowAverage:
    T: float
    A: np.ndarray


@dataclass(frozen=True)
class QuadraticWeight:
    T: float
    G: np.ndarray


@dataclass(frozen=True)
class DeformedForm:
    delta: float
    Qd: np.ndarray
    M: np.ndarray

    @property
    def form(self) -> QuadraticForm:
        return QuadraticForm.from_matrix(self.Qd)


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    """Nodes and weights of the m-point rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1), 0.5 * w


def _integrate(q: QuadraticForm, T: float, profile, tol: float, start: int = 16, max_nodes: int = 1024):
    """int_0^T profile(t) W(t) dt with node doubling until the relative change is below tol."""
    if T <= 0:
        raise ValueError("T must be positive")
    H = 2 * hamilton_map(q).ImF
    R = q.Q.real
    scale = max(np.abs(R).max(), 1e-300)
    prev = None
    m = start
    while m <= max_nodes:
        x, w = gauss_legendre(m)
        t = T * x
        acc = np.zeros_like(R)
        for tk, wk in zip(t, w):
            E = la.expm(tk * H)
            acc += wk * profile(tk) * (E.T @ R @ E)
        acc *= T
        if prev is not None and np.abs(acc - prev).max() <= tol * max(np.abs(acc).max(), scale * T):
            return 0.5 * (acc + acc.T)
        prev = acc
        m *= 2
    raise QuadratureNoConvergence(f"no convergence with {max_nodes} Gauss-Legendre nodes")


def flow_average(q: QuadraticForm, T: float = 1.0, tol: float = 1e-12) -> FlowAverage:
    """Time average of Re q along the Hamilton flow of Im q over [0, T]."""
    A = _integrate(q, T, lambda t: 1.0, tol) / T
    return FlowAverage(T=T, A=A)


def average_min_eig(
    q: QuadraticForm,
    T: float = 1.0,
    basis: np.ndarray | None = None,
    tol: float = 1e-10,
    start: int = 16,
    max_nodes: int = 4096,
) -> float:
    """Smallest eigenvalue of B^T A B for the flow average A, with relative accuracy.

    Forming A and calling eigvalsh loses everything below ~1e-16 |A|, which
    is fatal once the flow of Im q stretches strongly over [0, T].  Here Re Q
    = L L^T is factored and the quadrature is kept as a stacked square root
    C with C^T C = T A, so the answer is sigma_min(C B)^2 / T.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    d = 2 * q.n
    B = np.eye(d) if basis is None else np.asarray(basis, dtype=float)
    if B.shape[1] == 0:
        return float("inf")
    lam, V = np.linalg.eigh(q.Q.real)
    L = V * np.sqrt(np.clip(lam, 0.0, None))
    H = 2 * hamilton_map(q).ImF
    prev = None
    m = start
    while m <= max_nodes:
        x, w = gauss_legendre(m)
        C = np.vstack([np.sqrt(wk * T) * (L.T @ la.expm(T * xk * H) @ B) for xk, wk in zip(x, w)])
        cur = la.svdvals(C)[-1] ** 2 / T
        if prev is not None and abs(cur - prev) <= tol * max(abs(cur), np.finfo(float).tiny):
            return float(cur)
        prev = cur
        m *= 2
    raise QuadratureNoConvergence(f"no convergence with {max_nodes} Gauss-Legendre nodes")


def weight_go(q: QuadraticForm, T: float = 1.0, tol: float = 1e-12) -> QuadraticWeight:
    """Quadratic escape weight G(X) = int_0^T (1 - t/T) Re q(X_t) dt."""
    G = _integrate(q, T, lambda t: 1.0 - t / T, tol)
    return QuadraticWeight(T=T, G=G)


def check_escape_identity(q: QuadraticForm, weight: QuadraticWeight, average: FlowAverage) -> float:
    """Relative residual of H_{Im q} G = <Re q>_T - Re q at the matrix level.

    With H_{Im q} = 2 Im F the left side is X^T (2 ImF^T G + 2 G ImF) X.
    """
    K = hamilton_map(q).ImF
    G = weight.G
    R = q.Q.real
    lhs = 2 * K.T @ G + 2 * G @ K
    return float(np.linalg.norm(lhs - (average.A - R)) / (1 + np.linalg.norm(R)))


def deform(q: QuadraticForm, weight: QuadraticWeight, delta: float) -> DeformedForm:
    """q evaluated at X + i delta H_G(X), with H_G(X) = 2 J^{-1} G X."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    J = sigma_matrix(q.n)
    M = np.eye(2 * q.n) + 2j * delta * (-J) @ weight.G
    Qd = M.T @ q.Q @ M
    return DeformedForm(delta=delta, Qd=0.5 * (Qd + Qd.T), M=M)


def _sphere_grid(dim: int) -> np.ndarray:
    levels = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    pts = np.array(np.meshgrid(*[levels] * dim, indexing="ij")).reshape(dim, -1).T
    nrm = np.linalg.norm(pts, axis=1)
    pts = pts[nrm > 0]
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def ellipticity_radius(Qd, restarts: int = 20, seed: int = 0) -> float:
    """Smallest |q(X)| found on the real unit sphere.

    Local minimization of |q(X/|X|)|^2 from random starts, plus a coarse
    deterministic grid when the dimension is at most 4.  The result is an
    upper bound on the true minimum, not a certificate.
    """
    if isinstance(Qd, DeformedForm):
        Qd = Qd.Qd
    elif isinstance(Qd, QuadraticForm):
        Qd = Qd.Q
    Qd = np.asarray(Qd, dtype=complex)
    dim = Qd.shape[0]
    Re, Im = Qd.real, Qd.imag

    def f(y):
        r2 = y @ y
        a = y @ Re @ y / r2
        b = y @ Im @ y / r2
        return a * a + b * b

    def grad(y):
        r2 = y @ y
        a = y @ Re @ y / r2
        b = y @ Im @ y / r2
        da = 2 * (Re @ y - a * y) / r2
        db = 2 * (Im @ y - b * y) / r2
        return 2 * a * da + 2 * b * db

    rng = np.random.default_rng(seed)
    starts = list(rng.normal(size=(restarts, dim)))
    if dim <= 4:
        grid = _sphere_grid(dim)
        vals = np.array([f(y) for y in grid])
        starts.extend(grid[np.argsort(vals)[:5]])
    best = np.inf
    for y0 in starts:
        best = min(best, f(y0))
        res = minimize(f, y0, jac=grad, method="BFGS", options={"gtol": 1e-14})
        best = min(best, float(res.fun))
    return float(np.sqrt(max(best, 0.0)))
