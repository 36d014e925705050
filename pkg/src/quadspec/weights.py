"""Escape weights for polynomial symbols near doubly characteristic points.

The local weight around a critical point X_j is

    G_j(X) = int_0^T (1 - t/T) g(|X_t - X_j|^2 / eps) Re p0(X_t) dt,

with X_t the Hamilton flow of Im p0 and g the cutoff below.  Local weights
are glued with smooth bumps of radius ``rho`` around each critical point.
Gradients are propagated through the variational equation, so value and
gradient come from one ODE solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import FitFailure, InputError, OdeStepFailure, QuadratureNoConvergence
from .flow_weights import deform, ellipticity_radius, gauss_legendre, weight_go
from .symbols import CriticalPoint, PolyBundle, PolynomialSymbol
from .symplectic import sigma_matrix

__all__ = [
    "g",
    "g_prime",
    "g_second",
    "bump",
    "FlowState",
    "flow",
    "mollified_repart",
    "WeightField",
    "weight_G_eps",
    "ItemResult",
    "Prop1Report",
    "shell_grid",
    "verify_prop1",
    "C_TILDE_SCAN",
]

# quintic bridge on (1, 2), s = t - 1
_B = np.array([1.0, 0.0, 0.0, -31 / 8, 11 / 2, -17 / 8])


def g(t):
    """Cutoff: 1 on [0, 1], 1/t on [2, inf), C^2 quintic bridge in between."""
    t = np.asarray(t, dtype=float)
    s = t - 1
    bridge = np.polynomial.polynomial.polyval(s, _B)
    return np.where(t <= 1, 1.0, np.where(t >= 2, 1 / np.maximum(t, 1), bridge))


def g_prime(t):
    t = np.asarray(t, dtype=float)
    s = t - 1
    bridge = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(_B))
    return np.where(t <= 1, 0.0, np.where(t >= 2, -1 / np.maximum(t, 1) ** 2, bridge))


def g_second(t):
    t = np.asarray(t, dtype=float)
    s = t - 1
    bridge = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(_B, 2))
    return np.where(t <= 1, 0.0, np.where(t >= 2, 2 / np.maximum(t, 1) ** 3, bridge))


def _psi(u):
    # smooth step 0 -> 1 on [0, 1]
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1 / np.where(u > 0, u, 1)), 0.0)
        b = np.where(u < 1, np.exp(-1 / np.where(u < 1, 1 - u, 1)), 0.0)
    return a / (a + b)


def _psi_prime(u, h=1e-6):
    return (_psi(u + h) - _psi(u - h)) / (2 * h)


def bump(r, rho):
    """1 for r <= rho, 0 for r >= 2 rho, C-infinity in between."""
    if not np.isfinite(rho):
        return np.ones_like(np.asarray(r, dtype=float))
    return 1.0 - _psi(np.asarray(r, dtype=float) / rho - 1.0)


BUMP_PROFILE = "1 - psi(r/rho - 1), psi(u) = e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})"


@dataclass(frozen=True)
class FlowState:
    t: float
    X_t: np.ndarray
    DX_t: np.ndarray


class _Flow:
    """Hamilton field of Im p0 with its Jacobian, evaluated from one bundle."""

    def __init__(self, p0: PolynomialSymbol):
        self.d = p0.dim
        im = p0.imag_part
        self.trivial = not im.terms
        Jm = -sigma_matrix(p0.n)
        self.Jm = Jm
        if not self.trivial:
            d = self.d
            polys = [im.deriv(i) for i in range(d)]
            polys += [im.deriv(i).deriv(j) for i in range(d) for j in range(d)]
            self.bundle = PolyBundle(polys)

    def rhs(self, t, y):
        d = self.d
        X = y[:d]
        D = y[d:].reshape(d, d)
        v = self.bundle(X).real
        grad, hess = v[:d], v[d:].reshape(d, d)
        return np.concatenate([self.Jm @ grad, (self.Jm @ hess @ D).ravel()])

    def solve(self, X, T, tol, method="DOP853", dense=True):
        d = self.d
        y0 = np.concatenate([X, np.eye(d).ravel()])
        sol = solve_ivp(
            self.rhs, (0.0, T), y0, method=method, rtol=tol, atol=tol * 1e-2, dense_output=dense
        )
        if sol.status != 0:
            raise OdeStepFailure(sol.message)
        return sol


def flow(p0: PolynomialSymbol, X, t: float, tol_ode: float = 1e-12, method: str = "DOP853") -> FlowState:
    """Time-t map of the Hamilton flow of Im p0 and its Jacobian."""
    X = np.asarray(X, dtype=float)
    if X.shape != (p0.dim,):
        raise InputError(f"point must have {p0.dim} coordinates")
    fl = _Flow(p0)
    if fl.trivial or t == 0:
        return FlowState(t=t, X_t=X.copy(), DX_t=np.eye(p0.dim))
    sol = fl.solve(X, t, tol_ode, method, dense=False)
    y = sol.y[:, -1]
    return FlowState(t=t, X_t=y[: p0.dim], DX_t=y[p0.dim :].reshape(p0.dim, p0.dim))


def mollified_repart(p0: PolynomialSymbol, eps: float, X, center=None):
    """g(|X - center|^2 / eps) Re p0(X); vectorized over leading axes of X."""
    if eps <= 0:
        raise InputError("epsilon must be positive")
    X = np.asarray(X, dtype=float)
    c = np.zeros(p0.dim) if center is None else np.asarray(center, dtype=float)
    s = np.sum((X - c) ** 2, axis=-1) / eps
    return g(s) * p0(X).real


@dataclass
class WeightField:
    """G_eps = sum_j bump(|X - X_j|, rho) G_j(X).

    ``rho`` defaults to a quarter of the smallest distance between centers
    (infinite for a single center), so the bumps have disjoint supports.
    """

    p0: PolynomialSymbol
    eps: float
    T: float = 1.0
    centers: np.ndarray | None = None
    rho: float | None = None
    tol: float = 1e-10
    method: str = "DOP853"
    _flow: _Flow = field(init=False, repr=False)

    def __post_init__(self):
        if self.eps <= 0 or self.T <= 0:
            raise InputError("epsilon and T must be positive")
        d = self.p0.dim
        C = np.zeros((1, d)) if self.centers is None else np.asarray(self.centers, dtype=float).reshape(-1, d)
        self.centers = C
        if self.rho is None:
            if len(C) > 1:
                dist = np.linalg.norm(C[:, None] - C[None], axis=-1)
                self.rho = float(dist[np.triu_indices(len(C), 1)].min() / 4)
            else:
                self.rho = np.inf
        self._flow = _Flow(self.p0)

    @cached_property
    def _re(self) -> PolyBundle:
        re = self.p0.real_part
        return PolyBundle([re] + [re.deriv(i) for i in range(self.p0.dim)])

    def _integrand(self, t, X_t, D_t, c):
        """Profile-weighted value and gradient integrands at times t (vectorized)."""
        d = self.p0.dim
        v = self._re(X_t).real
        f, df = v[:, 0], v[:, 1:]
        Y = X_t - c
        s = np.sum(Y * Y, axis=1) / self.eps
        gs, gp = g(s), g_prime(s)
        w = 1.0 - t / self.T
        val = w * gs * f
        dm = (gp * 2 * f / self.eps)[:, None] * Y + gs[:, None] * df
        grad = w[:, None] * np.einsum("kij,ki->kj", D_t.reshape(-1, d, d), dm)
        return val, grad

    def _breakpoints(self, traj, c):
        """Times in (0, T) where |X_t - c|^2 / eps crosses 1 or 2."""
        d = self.p0.dim
        ts = np.linspace(0.0, self.T, 129)

        def s(t):
            X = traj(t)[:d]
            return np.sum((X - c) ** 2, axis=0) / self.eps

        vals = np.array([s(t) for t in ts])
        out = []
        for level in (1.0, 2.0):
            r = vals - level
            # touching a level on a sample point counts as a crossing there
            hit = np.abs(r) <= 1e-12 * level
            out.extend(ts[hit])
            r[hit] = 0.0
            for k in np.nonzero(r[:-1] * r[1:] < 0)[0]:
                out.append(brentq(lambda t: s(t) - level, ts[k], ts[k + 1], xtol=1e-15))
        # breakpoints hugging an end point only come from rounding
        gap = 1e-6 * self.T
        return sorted(t for t in set(out) if gap < t < self.T - gap)

    def _local(self, X, c):
        d = self.p0.dim
        if self._flow.trivial:
            Xt = np.tile(X, (1, 1))
            Dt = np.eye(d).reshape(1, d * d)
            val, grad = self._integrand(np.zeros(1), Xt, Dt, c)
            # integrand constant in t apart from the profile, whose integral is T/2
            return 0.5 * self.T * val[0], 0.5 * self.T * grad[0]
        sol = self._flow.solve(X, self.T, self.tol * 1e-2, self.method)
        traj = sol.sol
        edges = [0.0] + self._breakpoints(traj, c) + [self.T]
        val, grad = 0.0, np.zeros(d)
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 0:
                continue
            pv, pg = self._panel(traj, a, b, c)
            val += pv
            grad += pg
        return val, grad

    def _panel(self, traj, a, b, c, start=8, max_nodes=512):
        d = self.p0.dim
        prev = None
        m = start
        while m <= max_nodes:
            x, w = gauss_legendre(m)
            t = a + (b - a) * x
            Y = traj(t).T
            val, grad = self._integrand(t, Y[:, :d], Y[:, d:], c)
            cur = np.concatenate([[w @ val], w @ grad]) * (b - a)
            if prev is not None:
                scale = max(np.abs(cur).max(), self.eps * (b - a) * 1e-3)
                if np.abs(cur - prev).max() <= self.tol * scale:
                    return cur[0], cur[1:]
            prev = cur
            m *= 2
        raise QuadratureNoConvergence(f"panel [{a:.3g}, {b:.3g}] needs more than {max_nodes} nodes")

    def value_grad(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.p0.dim,):
            raise InputError(f"point must have {self.p0.dim} coordinates")
        val, grad = 0.0, np.zeros(self.p0.dim)
        for c in self.centers:
            r = float(np.linalg.norm(X - c))
            chi = float(bump(r, self.rho))
            dchi = 0.0
            if np.isfinite(self.rho) and self.rho < r < 2 * self.rho:
                dchi = -float(_psi_prime(r / self.rho - 1)) / self.rho
            if chi == 0.0 and dchi == 0.0:
                continue
            gj, dgj = self._local(X, c)
            val += chi * gj
            grad += chi * dgj
            if dchi:
                grad += gj * dchi * (X - c) / r
        return val, grad

    __call__ = value_grad

    def hessian_fd(self, X, step: float | None = None) -> np.ndarray:
        """Central differences of the gradient."""
        X = np.asarray(X, dtype=float)
        d = X.size
        h = 1e-3 * np.sqrt(self.eps) if step is None else step
        H = np.empty((d, d))
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            H[:, i] = (self.value_grad(X + e)[1] - self.value_grad(X - e)[1]) / (2 * h)
        return 0.5 * (H + H.T)

    def hamilton_field(self, X) -> np.ndarray:
        """H_G(X) = (d_xi G, -d_x G)."""
        _, grad = self.value_grad(X)
        return -sigma_matrix(self.p0.n) @ grad


def weight_G_eps(p0: PolynomialSymbol, eps: float, T: float, X, tol: float = 1e-10, centers=None):
    """Value and gradient of G_eps at X."""
    return WeightField(p0, eps, T, centers=centers, tol=tol).value_grad(X)


# ---------------------------------------------------------------- certification

C_TILDE_SCAN = (0.05, -0.05, 0.1, -0.1, 0.2, -0.2, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0)


@dataclass
class ItemResult:
    name: str
    passed: bool
    constants: dict
    worst: list | None
    note: str = ""


@dataclass
class Prop1Report:
    eps: float
    delta: float
    T: float
    items: list[ItemResult]
    grid: dict
    bump_profile: str = BUMP_PROFILE

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)

    def item(self, key: str) -> ItemResult:
        return next(it for it in self.items if it.name == key)


def shell_grid(centers, eps: float, r_max: float, angular: int = 32, radii=None, seed: int = 0):
    """Shell points around each center.

    Radii default to sqrt(eps)/2 * 2^k up to ``r_max`` (with r_max itself
    appended).  Directions: the coordinate axes with both signs plus
    ``angular`` seeded random unit vectors.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = centers.shape[1]
    if radii is None:
        radii = []
        r = 0.5 * np.sqrt(eps)
        while r < r_max * (1 - 1e-12):
            radii.append(r)
            r *= 2
        radii.append(r_max)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise InputError("grid radii must be positive and nonempty")
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(angular, d))
    U /= np.linalg.norm(U, axis=1)[:, None]
    dirs = np.vstack([np.eye(d), -np.eye(d), U])
    pts = (centers[:, None, None, :] + radii[None, :, None, None] * dirs[None, None]).reshape(-1, d)
    return pts, radii


def _centers_of(points):
    out = []
    for p in points:
        out.append(p.X if isinstance(p, CriticalPoint) else np.asarray(p, dtype=float))
    return np.atleast_2d(np.array(out, dtype=float))


def verify_prop1(
    p0: PolynomialSymbol,
    eps: float,
    delta: float,
    T: float,
    points,
    grid: dict | None = None,
    seed: int = 0,
    hessian_samples: int = 24,
    tol: float = 1e-10,
    floor: float = 1e-6,
) -> Prop1Report:
    """Grid check of the five weight properties around the critical points.

    ``points`` are CriticalPoints (or bare coordinates); distance to the
    characteristic set is distance to this list.  Item (iv) also includes
    the small-distance limit, which is the ellipticity radius of the
    deformed quadratic approximation at each point.
    """
    if eps <= 0 or T <= 0 or delta < 0:
        raise InputError("need epsilon > 0, T > 0 and delta >= 0")
    grid = dict(grid or {})
    centers = _centers_of(points)
    if centers.size == 0:
        raise InputError("no critical points supplied")
    r_max = float(grid.get("r_max", max(grid.get("radii", [0.4]))))
    pts, radii = shell_grid(
        centers, eps, r_max, int(grid.get("angular", 32)), grid.get("radii"), seed
    )
    field_ = WeightField(p0, eps, T, centers=centers, tol=tol)
    n_pts = len(pts)
    vals = np.empty(n_pts)
    grads = np.empty((n_pts, p0.dim))
    for k, X in enumerate(pts):
        vals[k], grads[k] = field_.value_grad(X)
    dist = np.min(np.linalg.norm(pts[:, None, :] - centers[None], axis=-1), axis=1)
    Jm = -sigma_matrix(p0.n)
    ptil = p0(pts + 1j * delta * grads @ Jm.T)
    se = np.sqrt(eps)
    items: list[ItemResult] = []

    def worst(k):
        return [float(v) for v in pts[k]]

    # (i)
    rng = np.random.default_rng(seed + 1)
    sub = rng.choice(n_pts, size=min(hessian_samples, n_pts), replace=False)
    hnorm = np.array([np.linalg.norm(field_.hessian_fd(pts[k]), 2) for k in sub])
    k0 = int(np.argmax(np.abs(vals)))
    K0 = float(np.abs(vals[k0]) / eps)
    K2 = float(hnorm.max())
    items.append(
        ItemResult(
            "i",
            bool(np.isfinite(K0) and np.isfinite(K2)),
            {"sup_G_over_eps": K0, "sup_hessian_norm": K2, "hessian_samples": int(len(sub))},
            worst(k0),
        )
    )

    gn = np.linalg.norm(grads, axis=1)
    # (ii)
    inner = dist <= se * (1 + 1e-12)
    if inner.any():
        ratio = np.where(inner, gn / np.where(dist > 0, dist, 1), -np.inf)
        k = int(np.argmax(ratio))
        items.append(ItemResult("ii", bool(np.isfinite(ratio[k])), {"C": float(ratio[k])}, worst(k)))
    else:
        items.append(ItemResult("ii", False, {}, None, "no grid point with dist <= sqrt(eps)"))
    # (iii)
    outer = dist >= se * (1 - 1e-12)
    if outer.any():
        ratio = np.where(outer, gn / se, -np.inf)
        k = int(np.argmax(ratio))
        items.append(ItemResult("iii", bool(np.isfinite(ratio[k])), {"C": float(ratio[k])}, worst(k)))
    else:
        items.append(ItemResult("iii", False, {}, None, "no grid point with dist >= sqrt(eps)"))

    # (iv): lower-bound slope c with |p~| >= c min(d^2, eps); C~ = delta / c
    low = np.abs(ptil) / np.minimum(dist**2, eps)
    k = int(np.argmin(low))
    c_grid = float(low[k])
    c_lim = np.inf
    for p in points:
        if isinstance(p, CriticalPoint):
            q = p.qform
            G0 = weight_go(q, T)
            c_lim = min(c_lim, ellipticity_radius(deform(q, G0, delta)))
    c_iv = min(c_grid, c_lim)
    ok = c_iv > floor
    note = "" if ok else "no positive lower bound"
    items.append(
        ItemResult(
            "iv",
            bool(ok),
            {
                "c_grid": c_grid,
                "c_limit": float(c_lim),
                "C_tilde": float(delta / c_iv) if c_iv > 0 and delta > 0 else float("inf"),
            },
            worst(k) if c_grid <= c_lim else None,
            note,
        )
    )

    # (v): Re((1 - i c~ delta eps / d^2) p~) >= delta eps / C~ where d >= sqrt(eps)
    if not outer.any():
        items.append(ItemResult("v", False, {}, None, "no grid point with dist >= sqrt(eps)"))
    elif delta == 0:
        # the bound degenerates to Re p0 >= 0
        m = float(ptil[outer].real.min())
        items.append(ItemResult("v", m >= -tol, {"min_re": m}, None, "delta = 0: bound reduces to Re p0 >= 0"))
    else:
        po, do = ptil[outer], dist[outer]
        best = None
        for ct in C_TILDE_SCAN:
            lhs = (po.real + ct * delta * eps / do**2 * po.imag) / (delta * eps)
            j = int(np.argmin(lhs))
            if best is None or lhs[j] > best[1]:
                best = (ct, float(lhs[j]), j)
        ct, L, j = best
        if L <= 0:
            raise FitFailure(f"item (v) violated for every c~ in {C_TILDE_SCAN}; best margin {L:.3e}")
        idx = np.nonzero(outer)[0][j]
        items.append(ItemResult("v", True, {"c_tilde": ct, "C_tilde": 1.0 / L}, worst(idx)))

    desc = {
        "radii": [float(r) for r in radii],
        "angular": int(grid.get("angular", 32)),
        "axes": True,
        "points": int(n_pts),
        "seed": seed,
    }
    return Prop1Report(eps=eps, delta=delta, T=T, items=items, grid=desc)
