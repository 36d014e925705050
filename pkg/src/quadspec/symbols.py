"""Polynomial symbols, doubly characteristic points and admissible z.

Symbols are polynomials p(x, xi) = sum c_{ab} x^a xi^b.  Polynomials extend to
entire functions, so p(X + iY) is computed exactly and all derivatives come
from shifting exponents.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AnalysisError,
    EllipticityRequired,
    InputError,
    NewtonDiverged,
    NotCharacteristic,
    NotCritical,
)
from .flow_weights import ellipticity_radius
from .symplectic import QuadraticForm, SpectrumLattice, analyze, quadratic_spectrum

log = logging.getLogger(__name__)

MAX_DEGREE = 6

__all__ = [
    "PolynomialSymbol",
    "PolyBundle",
    "CriticalPoint",
    "AdmissibleRegion",
    "InfinityReport",
    "verify_double_characteristic",
    "find_characteristic_points",
    "classify",
    "admissible_z",
    "ellipticity_at_infinity_check",
]


class PolyBundle:
    """Evaluate several polynomials in 2n variables sharing one monomial table."""

    def __init__(self, polys):
        polys = list(polys)
        table: dict[tuple, int] = {}
        for p in polys:
            for e in p.terms:
                table.setdefault(e, len(table))
        dim = polys[0].dim if polys else 0
        self.exps = np.array(list(table), dtype=int).reshape(-1, dim)
        self.coefs = np.zeros((len(table), len(polys)), dtype=complex)
        for k, p in enumerate(polys):
            for e, c in p.terms.items():
                self.coefs[table[e], k] += c
        self.real = bool(np.all(self.coefs.imag == 0))
        if self.real:
            self.coefs = self.coefs.real

    def __call__(self, X):
        X = np.asarray(X)
        mono = np.prod(X[..., None, :] ** self.exps, axis=-1)
        return mono @ self.coefs


@dataclass(frozen=True)
class PolynomialSymbol:
    """p(X) = sum_e c_e X^e over X = (x_1..x_n, xi_1..xi_n)."""

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for e, c in self.terms.items():
            e = tuple(int(v) for v in e)
            if len(e) != 2 * self.n or min(e, default=0) < 0:
                raise InputError(f"bad exponent {e} for n={self.n}")
            c = complex(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c != 0})

    @property
    def dim(self) -> int:
        return 2 * self.n

    @classmethod
    def from_terms(cls, n: int, terms, max_degree: int = MAX_DEGREE) -> "PolynomialSymbol":
        """From records with ``alpha``, ``beta``, ``re``, ``im`` keys."""
        out: dict[tuple, complex] = {}
        for t in terms:
            alpha, beta = list(t["alpha"]), list(t["beta"])
            if len(alpha) != n or len(beta) != n:
                raise InputError(f"term {t} does not have {n} x- and {n} xi-exponents")
            e = tuple(alpha + beta)
            if sum(e) > max_degree:
                raise InputError(f"term of degree {sum(e)} exceeds the cap {max_degree}")
            out[e] = out.get(e, 0) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(n, out)

    @classmethod
    def from_quadratic(cls, q: QuadraticForm) -> "PolynomialSymbol":
        d = 2 * q.n
        out = {}
        for i in range(d):
            for j in range(i, d):
                e = [0] * d
                e[i] += 1
                e[j] += 1
                c = q.Q[i, i] if i == j else 2 * q.Q[i, j]
                out[tuple(e)] = out.get(tuple(e), 0) + c
        return cls(q.n, out)

    def to_terms(self) -> list[dict]:
        return [
            {"alpha": list(e[: self.n]), "beta": list(e[self.n :]), "re": c.real, "im": c.imag}
            for e, c in sorted(self.terms.items())
        ]

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def real_part(self) -> "PolynomialSymbol":
        return PolynomialSymbol(self.n, {e: c.real for e, c in self.terms.items()})

    @property
    def imag_part(self) -> "PolynomialSymbol":
        return PolynomialSymbol(self.n, {e: c.imag for e, c in self.terms.items()})

    def __add__(self, other: "PolynomialSymbol") -> "PolynomialSymbol":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return PolynomialSymbol(self.n, out)

    def scaled(self, s) -> "PolynomialSymbol":
        return PolynomialSymbol(self.n, {e: s * c for e, c in self.terms.items()})

    def deriv(self, i: int) -> "PolynomialSymbol":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return PolynomialSymbol(self.n, out)

    @cached_property
    def _value(self) -> PolyBundle:
        return PolyBundle([self])

    @cached_property
    def _grad(self) -> PolyBundle:
        return PolyBundle([self.deriv(i) for i in range(self.dim)])

    @cached_property
    def _hess(self) -> PolyBundle:
        return PolyBundle([self.deriv(i).deriv(j) for i in range(self.dim) for j in range(self.dim)])

    def __call__(self, X):
        X = np.asarray(X)
        if not self.terms:
            return np.zeros(X.shape[:-1], dtype=complex)
        return self._value(X)[..., 0].astype(complex)

    def gradient(self, X) -> np.ndarray:
        X = np.asarray(X)
        if not self.terms:
            return np.zeros(X.shape, dtype=complex)
        return self._grad(X).astype(complex)

    def hessian(self, X) -> np.ndarray:
        X = np.asarray(X)
        d = self.dim
        if not self.terms:
            return np.zeros(X.shape[:-1] + (d, d), dtype=complex)
        return self._hess(X).reshape(X.shape[:-1] + (d, d)).astype(complex)

    def quadratic_part(self, X0) -> QuadraticForm:
        """Second-order Taylor form at X0: q(Y) = Y^T (Hess/2) Y."""
        return QuadraticForm(self.n, 0.5 * self.hessian(np.asarray(X0, dtype=float)))


@dataclass(frozen=True)
class CriticalPoint:
    X: np.ndarray
    res_value: float
    res_grad: float
    qform: QuadraticForm
    p1_value: complex = 0j
    warnings: tuple[str, ...] = ()


def verify_double_characteristic(
    p0: PolynomialSymbol,
    X,
    tol: float = 1e-8,
    p1: PolynomialSymbol | None = None,
    sign_radius: float = 1.0,
    sign_samples: int = 256,
    seed: int = 0,
) -> CriticalPoint:
    """Check p0(X) = 0 and dp0(X) = 0; extract the quadratic approximation.

    The sign condition Re p0 >= 0 is spot-checked on a ball of radius
    ``sign_radius`` around X; violations are recorded as warnings.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (p0.dim,):
        raise InputError(f"point must have {p0.dim} coordinates")
    rv = float(abs(p0(X)))
    if rv > tol:
        raise NotCharacteristic(f"|p0(X)| = {rv:.3e} > {tol:.1e}")
    rg = float(np.linalg.norm(p0.gradient(X)))
    if rg > tol:
        raise NotCritical(f"|dp0(X)| = {rg:.3e} > {tol:.1e}")
    notes = []
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(sign_samples, p0.dim))
    U *= (rng.uniform(size=sign_samples) ** (1 / p0.dim) / np.linalg.norm(U, axis=1))[:, None]
    re = p0(X + sign_radius * U).real
    if re.min() < -tol:
        notes.append(f"Re p0 = {re.min():.3e} < 0 on the sampled ball")
    q = p0.quadratic_part(X)
    if not q.is_admissible():
        notes.append("Re of the quadratic approximation is not positive semidefinite")
    p1v = complex(p1(X)) if p1 is not None else 0j
    return CriticalPoint(X=X, res_value=rv, res_grad=rg, qform=q, p1_value=p1v, warnings=tuple(notes))


def find_characteristic_points(
    p0: PolynomialSymbol,
    seeds,
    tol: float = 1e-8,
    p1: PolynomialSymbol | None = None,
    max_iter: int = 500,
    errors: list | None = None,
) -> list[CriticalPoint]:
    """Newton iteration on grad Re p0 = 0 from user-supplied seeds.

    Seeds that fail (divergence, or a critical point that is not a zero of
    p0) are skipped; the exceptions are appended to ``errors`` when given.
    Points closer than 10*tol are merged.
    """
    rp = p0.real_part
    found: list[CriticalPoint] = []
    for seed in seeds:
        try:
            X = _newton(rp, np.asarray(seed, dtype=float), max_iter)
            cp = verify_double_characteristic(p0, X, tol, p1)
        except AnalysisError as exc:
            log.info("seed %s rejected: %s", seed, exc)
            if errors is not None:
                errors.append((tuple(np.asarray(seed, dtype=float)), exc))
            continue
        if not any(np.linalg.norm(cp.X - other.X) < 10 * tol for other in found):
            found.append(cp)
    return found


def _newton(rp: PolynomialSymbol, X: np.ndarray, max_iter: int) -> np.ndarray:
    def gnorm(Y):
        return float(np.linalg.norm(rp.gradient(Y).real))

    g = gnorm(X)
    for _ in range(max_iter):
        if g == 0.0:
            return X
        grad = rp.gradient(X).real
        H = rp.hessian(X).real
        try:
            step = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            Y = X + t * step
            gy = gnorm(Y)
            if np.isfinite(gy) and gy < g:
                break
            t *= 0.5
        else:
            # no decrease along the step: accept only if it is negligible
            if np.linalg.norm(step) <= 1e-12 * (1 + np.linalg.norm(X)):
                return X
            raise NewtonDiverged(f"no descent from {X}")
        if not np.all(np.isfinite(Y)) or np.linalg.norm(Y) > 1e8:
            raise NewtonDiverged("iterate escaped to infinity")
        done = np.linalg.norm(Y - X) <= 1e-14 * (1 + np.linalg.norm(X))
        X, g = Y, gy
        if done:
            return X
    return X


def classify(q: QuadraticForm, tol: float = 1e-10) -> str:
    """'globally elliptic', 'partially elliptic' or 'fails'."""
    if not q.is_admissible():
        return "fails"
    if ellipticity_radius(q, restarts=8) > 1e-8:
        return "globally elliptic"
    try:
        _, ok = analyze(q, tol)
    except AnalysisError:
        return "fails"
    return "partially elliptic" if ok else "fails"


@dataclass
class AdmissibleRegion:
    """|z| <= C_bound and z - p1(X_j) stays ``margin`` away from each lattice."""

    points: list[CriticalPoint]
    margin: float
    C_bound: float = np.inf
    _cache: dict = field(default_factory=dict, repr=False)

    def lattice(self, j: int, R: float) -> SpectrumLattice:
        cached = self._cache.get(j)
        if cached is None or cached.radius < R:
            try:
                cached = quadratic_spectrum(self.points[j].qform, R)
            except AnalysisError as exc:
                raise EllipticityRequired(str(exc)) from exc
            self._cache[j] = cached
        return cached

    def distance(self, z: complex) -> float:
        d = np.inf
        for j, cp in enumerate(self.points):
            w = z - cp.p1_value
            lat = self.lattice(j, abs(w) + self.margin + 1.0)
            d = min(d, lat.distance(w))
        return float(d)

    def __call__(self, z: complex) -> bool:
        return abs(z) <= self.C_bound and self.distance(z) >= self.margin


def admissible_z(points, z: complex, margin: float, R: float | None = None) -> bool:
    """True iff z - p1(X_j) is at least ``margin`` from every lattice sigma(q_j^w)."""
    for cp in points:
        w = z - cp.p1_value
        radius = abs(w) + margin if R is None else max(R, abs(w) + margin)
        try:
            lat = quadratic_spectrum(cp.qform, radius)
        except AnalysisError as exc:
            raise EllipticityRequired(str(exc)) from exc
        if lat.distance(w) < margin:
            return False
    return True


@dataclass(frozen=True)
class InfinityReport:
    C_test: float
    min_re: float
    inv_C: float
    passed: bool
    worst: np.ndarray


def ellipticity_at_infinity_check(
    p0: PolynomialSymbol, C_test: float, samples: int = 2000, seed: int = 0, tol: float = 1e-8
) -> InfinityReport:
    """Sample Re p0 on shells C_test <= |X| <= 4 C_test (advisory only).

    Random directions are supplemented by the coordinate axes, where
    degenerate symbols typically vanish.
    """
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(samples, p0.dim))
    U /= np.linalg.norm(U, axis=1)[:, None]
    r = rng.uniform(C_test, 4 * C_test, size=samples)
    X = U * r[:, None]
    axes = np.vstack([np.eye(p0.dim), -np.eye(p0.dim)])
    X = np.vstack([X] + [s * C_test * axes for s in (1.0, 2.0, 4.0)])
    re = p0(X).real
    k = int(np.argmin(re))
    return InfinityReport(
        C_test=C_test, min_re=float(re[k]), inv_C=float(max(re[k], 0.0)), passed=bool(re[k] > tol), worst=X[k]
    )
