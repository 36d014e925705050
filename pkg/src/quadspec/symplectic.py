"""Symplectic linear algebra for complex quadratic forms on phase space.

Conventions
-----------
Phase space is R^{2n} with ordered coordinates (x_1..x_n, xi_1..xi_n).  The
symplectic form is sigma(X, Y) = xi.y - x.eta, realized as X^T J Y with
J = [[0, -I], [I, 0]].  A quadratic form is q(X) = X^T Q X with Q complex
symmetric, and its Hamilton map is the unique F with sigma(X, F Y) = q(X; Y),
i.e. J F = Q, i.e. F = -J Q.  With these choices the Hamilton vector field of
a real form f(X) = X^T B X is H_f(X) = 2 (-J) B X, so H_{Im q} = 2 Im F.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la

from .errors import (
    ClusterAmbiguity,
    EllipticityRequired,
    IndefiniteButNonzero,
    InputError,
    NotPartiallyElliptic,
    NotSymplectic,
    RankAmbiguity,
    SplittingMismatch,
)

__all__ = [
    "sigma_matrix",
    "QuadraticForm",
    "HamiltonMap",
    "Williamson",
    "SingularSpace",
    "LatticePoint",
    "SpectrumLattice",
    "hamilton_map",
    "singular_space",
    "real_eigen_splitting",
    "is_elliptic_on_singular_space",
    "analyze",
    "symplectic_splitting",
    "quadratic_spectrum",
    "lct_pushforward",
    "kappa_T",
    "random_symplectic",
    "is_symplectic",
]


def sigma_matrix(n: int) -> np.ndarray:
    """Matrix J of the canonical symplectic form on R^{2n}."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class QuadraticForm:
    """q(X) = X^T Q X on R^{2n}; Q is symmetrized on construction."""

    n: int
    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=complex)
        if self.n < 1 or Q.shape != (2 * self.n, 2 * self.n):
            raise InputError(f"expected a {2 * self.n}x{2 * self.n} matrix, got {Q.shape}")
        if not np.all(np.isfinite(Q)):
            raise InputError("quadratic form has non-finite coefficients")
        Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_matrix(cls, Q) -> "QuadraticForm":
        Q = np.asarray(Q)
        return cls(Q.shape[0] // 2, Q)

    @classmethod
    def from_monomials(cls, n: int, terms) -> "QuadraticForm":
        """Build q from ``(exponents, coefficient)`` pairs of total degree 2.

        ``exponents`` has length 2n and is ordered over x_1..x_n, xi_1..xi_n.
        """
        Q = np.zeros((2 * n, 2 * n), dtype=complex)
        for mono, c in terms:
            mono = [int(e) for e in mono]
            if len(mono) != 2 * n or min(mono) < 0 or sum(mono) != 2:
                raise InputError(f"monomial {mono} is not of degree 2 in {2 * n} variables")
            idx = [i for i, e in enumerate(mono) for _ in range(e)]
            i, j = idx
            if i == j:
                Q[i, i] += c
            else:
                Q[i, j] += c / 2
                Q[j, i] += c / 2
        return cls(n, Q)

    @property
    def re(self) -> "QuadraticForm":
        return QuadraticForm(self.n, self.Q.real)

    @property
    def im(self) -> "QuadraticForm":
        return QuadraticForm(self.n, self.Q.imag)

    def __call__(self, X):
        X = np.asarray(X)
        return np.einsum("...i,ij,...j->...", X, self.Q, X)

    def polar(self, X, Y):
        """Polarized (symmetric bilinear) form q(X; Y)."""
        return np.asarray(X) @ self.Q @ np.asarray(Y)

    def is_admissible(self, tol_psd: float = 1e-12) -> bool:
        """Whether Re q >= 0, up to ``tol_psd`` relative to the size of Q."""
        scale = max(1.0, np.abs(self.Q).max())
        return bool(np.linalg.eigvalsh(self.Q.real).min() >= -tol_psd * scale)

    def __add__(self, other: "QuadraticForm") -> "QuadraticForm":
        return QuadraticForm(self.n, self.Q + other.Q)

    def scaled(self, c) -> "QuadraticForm":
        return QuadraticForm(self.n, c * self.Q)


@dataclass(frozen=True)
class HamiltonMap:
    F: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0] // 2

    @property
    def ReF(self) -> np.ndarray:
        return self.F.real

    @property
    def ImF(self) -> np.ndarray:
        return self.F.imag


@dataclass(frozen=True)
class Williamson:
    """Normal form of q restricted to S: i*sign*sum_j freqs_j (x_j''^2 + xi_j''^2).

    ``basis`` is a real 2n x 2m matrix whose columns (x''_1..x''_m,
    xi''_1..xi''_m) form a symplectic basis of S realizing that normal form.
    """

    sign: int
    freqs: np.ndarray
    basis: np.ndarray


@dataclass(frozen=True)
class SingularSpace:
    basis: np.ndarray
    perp: np.ndarray
    williamson: Williamson | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class LatticePoint:
    value: complex
    k: tuple[int, ...]


@dataclass(frozen=True)
class SpectrumLattice:
    """Eigenvalue lattice ground + 2 sum_l k_l mu_l, k_l >= 0 (a multiset)."""

    generators: list[tuple[complex, int]]
    radius: float
    points: list[LatticePoint] = field(default_factory=list)

    @property
    def ground(self) -> complex:
        return complex(sum(r * mu for mu, r in self.generators))

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points], dtype=complex)

    def distance(self, z: complex) -> float:
        """Distance from z to the enumerated points (inf if there are none)."""
        if not self.points:
            return float("inf")
        return float(np.abs(self.values() - z).min())


def hamilton_map(q: QuadraticForm) -> HamiltonMap:
    return HamiltonMap(-sigma_matrix(q.n) @ q.Q)


def _null_space(A: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal null-space basis with a relative threshold tol*s_max.

    Raises RankAmbiguity when a singular value falls within a factor of 10
    of the threshold on either side.
    """
    _, s, vh = np.linalg.svd(A)
    m = A.shape[1]
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(m)
    thresh = tol * smax
    full = np.zeros(m)
    full[: s.size] = s
    ambiguous = (full > thresh / 10) & (full < thresh * 10)
    if np.any(ambiguous):
        raise RankAmbiguity(
            f"singular value {full[ambiguous][0]:.3e} too close to threshold {thresh:.3e}"
        )
    rank = int((full > thresh).sum())
    return vh[rank:].conj().T


def _normalized(M: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(M, 2)
    return M / nrm if nrm > 0 else M


def singular_space(F: HamiltonMap, tol: float = 1e-10, powers: int | None = None) -> SingularSpace:
    """Intersection of Ker[Re F (Im F)^j] over j < powers (default 2n), in R^{2n}.

    Re F and Im F are rescaled to unit spectral norm first; this leaves every
    kernel unchanged and keeps the stacked powers comparable in size.
    """
    n2 = F.F.shape[0]
    powers = n2 if powers is None else powers
    R = _normalized(F.ReF)
    M = _normalized(F.ImF)
    blocks = []
    P = np.eye(n2)
    for _ in range(powers):
        blocks.append(R @ P)
        P = M @ P
    stacked = np.vstack(blocks)
    B = _null_space(stacked, tol).real
    if B.shape[1]:
        B, _ = np.linalg.qr(B)
    J = sigma_matrix(n2 // 2)
    perp = _null_space(B.T @ J, tol) if B.shape[1] else np.eye(n2)
    return SingularSpace(basis=B, perp=perp)


def _real_span(K: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of span_C(K) intersected with R^m."""
    if K.shape[1] == 0:
        return np.zeros((K.shape[0], 0))
    # v = K c real  <=>  Im K c = 0; with c = a + ib: Im(K) a + Re(K) b = 0
    N = _null_space(np.hstack([K.imag, K.real]), tol)
    k = K.shape[1]
    V = K.real @ N[:k] - K.imag @ N[k:]
    if V.shape[1] == 0:
        return V
    u, s, _ = np.linalg.svd(V, full_matrices=False)
    return u[:, s > tol * max(s[0], 1e-300)]


def real_eigen_splitting(F: HamiltonMap, tol: float = 1e-8, S: SingularSpace | None = None):
    """Real eigenvalue pairs +-lambda_j of F with bases of S_{lambda_j}.

    Returns a list of ``(lambda_j, basis)`` with lambda_j > 0; the bases are
    real orthonormal 2n x d_j matrices.  Cross-checked against ``S``.
    """
    n2 = F.F.shape[0]
    scale = max(np.linalg.norm(F.F, 2), 1e-300)
    lams = []
    for lam in np.linalg.eigvals(F.F):
        if abs(lam.imag) <= tol * scale and abs(lam) > tol * scale:
            a = abs(lam.real)
            if not any(abs(a - b) <= 100 * tol * scale for b in lams):
                lams.append(a)
    out = []
    for lam in sorted(lams):
        kers = []
        for s in (lam, -lam):
            # eigenvalues of multiplicity > 1 are computed with O(sqrt(eps)) error
            kers.append(_null_space_loose(F.F - s * np.eye(n2), max(tol, 1e-7)))
        out.append((lam, _real_span(np.hstack(kers), 1e-8)))
    if S is None:
        S = singular_space(F)
    total = sum(b.shape[1] for _, b in out)
    if total != S.dim:
        raise SplittingMismatch(f"real eigenspaces have total dimension {total}, dim S = {S.dim}")
    if total:
        stacked = np.hstack([b for _, b in out])
        resid = np.linalg.norm(stacked - S.basis @ (S.basis.T @ stacked))
        if resid > 1e-6:
            raise SplittingMismatch(f"real eigenspaces leave S (residual {resid:.2e})")
    return out


def _null_space_loose(A: np.ndarray, tol: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(A)
    thresh = tol * max(s[0], 1e-300)
    return vh[int((s > thresh).sum()):].conj().T


def _pair_basis(A: np.ndarray):
    """Orthogonal O and d > 0 with O^T A O = [[0, -D], [D, 0]] for real antisymmetric A."""
    k = A.shape[0]
    T, Z = la.schur(A, output="real")
    scale = max(np.abs(A).max(), 1e-300)
    a_cols, b_cols, d = [], [], []
    i = 0
    while i < k:
        if i + 1 < k and abs(T[i + 1, i]) > 1e-12 * scale:
            t21 = T[i + 1, i]
            if t21 > 0:
                a_cols.append(Z[:, i]), b_cols.append(Z[:, i + 1]), d.append(t21)
            else:
                a_cols.append(Z[:, i]), b_cols.append(-Z[:, i + 1]), d.append(-t21)
            i += 2
        else:
            raise NotSymplectic("restricted symplectic form is degenerate")
    order = np.argsort(d)
    d = np.asarray(d)[order]
    O = np.column_stack([np.column_stack(a_cols)[:, order], np.column_stack(b_cols)[:, order]])
    return O, d


def _williamson(P: np.ndarray, Omega: np.ndarray):
    """W with W^T Omega W = J and W^T P W = diag(lam, lam) for P > 0.

    Returns (W, lam) with lam ascending.
    """
    w, V = np.linalg.eigh(P)
    P_mhalf = V @ np.diag(w ** -0.5) @ V.T
    A = P_mhalf @ Omega @ P_mhalf
    A = 0.5 * (A - A.T)
    O, d = _pair_basis(A)
    scale = np.concatenate([d, d]) ** -0.5
    return P_mhalf @ O * scale, 1.0 / d


def is_elliptic_on_singular_space(q: QuadraticForm, S: SingularSpace, tol: float = 1e-10):
    """Decide partial ellipticity; returns ``(ok, williamson_or_None)``.

    On S the real part of q vanishes, so q|_S = i Im q|_S and ellipticity means
    Im q|_S is definite.  When it is, the Williamson reduction of Im q|_S with
    respect to the restricted symplectic form is returned.
    """
    k = S.dim
    if k == 0:
        return True, Williamson(sign=1, freqs=np.zeros(0), basis=np.zeros((2 * q.n, 0)))
    B = S.basis
    M = B.T @ q.Q.imag @ B
    M = 0.5 * (M + M.T)
    ev = np.linalg.eigvalsh(M)
    scale = max(np.abs(q.Q).max(), 1e-300)
    big = np.abs(ev) > tol * scale
    if not np.all(big):
        if np.any(ev > tol * scale) and np.any(ev < -tol * scale):
            raise IndefiniteButNonzero("Im q is indefinite on S")
        return False, None
    if np.all(ev > 0):
        sign = 1
    elif np.all(ev < 0):
        sign = -1
    else:
        raise IndefiniteButNonzero("Im q is indefinite on S")
    if k % 2:
        return False, None
    Omega = B.T @ sigma_matrix(q.n) @ B
    W, lam = _williamson(sign * M, Omega)
    return True, Williamson(sign=sign, freqs=lam, basis=B @ W)


def analyze(q: QuadraticForm, tol: float = 1e-10) -> tuple[SingularSpace, bool]:
    """Singular space of q with Williamson data attached when available."""
    S = singular_space(hamilton_map(q), tol)
    ok, will = is_elliptic_on_singular_space(q, S, tol)
    return replace(S, williamson=will), ok


def symplectic_splitting(q: QuadraticForm, S: SingularSpace, tol: float = 1e-10) -> np.ndarray:
    """Real symplectic C whose columns are ordered (x', x'', xi', xi'').

    (x'', xi'') is the Williamson basis of S and (x', xi') a symplectic basis of
    the symplectic complement, so C^T Q C splits into two blocks.
    """
    if S.williamson is None:
        ok, will = is_elliptic_on_singular_space(q, S, tol)
        if not ok:
            raise NotPartiallyElliptic("q is not elliptic on its singular space")
        S = replace(S, williamson=will)
    will = S.williamson
    m = will.freqs.size
    J = sigma_matrix(q.n)
    Bp = S.perp
    if Bp.shape[1]:
        Op, dp = _pair_basis(Bp.T @ J @ Bp)
        Wp = Bp @ Op * np.concatenate([dp, dp]) ** -0.5
    else:
        Wp = np.zeros((2 * q.n, 0))
    npr = Wp.shape[1] // 2
    C = np.hstack([Wp[:, :npr], will.basis[:, :m], Wp[:, npr:], will.basis[:, m:]])
    if not is_symplectic(C, 1e-8):
        raise NotSymplectic("splitting basis is not symplectic")
    return C


def _cluster(ev: np.ndarray, radius: float):
    """Single-linkage clusters of eigenvalues within ``radius``."""
    m = ev.size
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(ev[i] - ev[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    clusters = [ev[idx] for idx in groups.values()]
    for a, b in itertools.combinations(clusters, 2):
        gap = np.abs(a[:, None] - b[None, :]).min()
        if gap <= 10 * radius:
            raise ClusterAmbiguity(f"eigenvalue clusters separated by only {gap:.3e}")
    return clusters


def quadratic_spectrum(
    q: QuadraticForm,
    R: float,
    tol: float = 1e-10,
    tol_cluster: float | None = None,
    max_points: int = 200_000,
) -> SpectrumLattice:
    """Enumerate the spectrum of q^w(x, D_x) within |z| <= R.

    Generators are mu = -i lambda for eigenvalues lambda of F with Im lambda > 0
    (so mu lies in the open right half plane) together with the real lambda
    whose sign is opposite to the Williamson sign of q on S (so mu lies on the
    ray q(S) \\ {0}); each comes with its algebraic multiplicity r.
    """
    if not q.is_admissible():
        raise EllipticityRequired("Re q is not positive semidefinite")
    S, ok = analyze(q, tol)
    if not ok:
        raise EllipticityRequired("q is not elliptic on its singular space")
    F = hamilton_map(q).F
    scale = max(np.linalg.norm(F, 2), 1e-300)
    radius = 1e-8 * scale if tol_cluster is None else tol_cluster
    sign = S.williamson.sign if S.dim else 0
    gens = []
    for cl in _cluster(np.linalg.eigvals(F), radius):
        lam = cl.mean()
        if lam.imag > radius:
            gens.append((complex(-1j * lam), cl.size))
        elif abs(lam.imag) <= radius and abs(lam) > radius and sign and np.sign(lam.real) == -sign:
            gens.append((complex(-1j * lam.real), cl.size))
    return _enumerate(gens, R, sign, max_points)


def _enumerate(gens, R: float, sign: int, max_points: int) -> SpectrumLattice:
    ground = complex(sum(r * mu for mu, r in gens))
    right = [i for i, (mu, _) in enumerate(gens) if mu.real > 0 and abs(mu.real) > 1e-12 * abs(mu)]
    axis = [i for i in range(len(gens)) if i not in right]
    points: list[LatticePoint] = []
    k = [0] * len(gens)

    def walk_axis(pos: int, value: complex, budget: float):
        if pos == len(axis):
            if abs(value) <= R:
                points.append(LatticePoint(value, tuple(k)))
                if len(points) > max_points:
                    raise InputError(f"more than {max_points} lattice points; lower the radius")
            return
        i = axis[pos]
        step = 2 * abs(gens[i][0].imag)
        kk = 0
        while kk * step <= budget + 1e-12:
            k[i] = kk
            walk_axis(pos + 1, value + 2 * kk * gens[i][0], budget)
            kk += 1
            if step == 0:
                break
        k[i] = 0

    def walk_right(pos: int, value: complex, budget: float):
        if pos == len(right):
            im_budget = R - sign * value.imag if sign else R
            walk_axis(0, value, im_budget)
            return
        i = right[pos]
        step = 2 * gens[i][0].real
        kk = 0
        while kk * step <= budget + 1e-12:
            k[i] = kk
            walk_right(pos + 1, value + 2 * kk * gens[i][0], budget - kk * step)
            kk += 1
        k[i] = 0

    walk_right(0, ground, R - ground.real)
    points.sort(key=lambda p: (round(abs(p.value), 12), np.angle(p.value)))
    return SpectrumLattice(generators=list(gens), radius=R, points=points)


def is_symplectic(C: np.ndarray, tol: float = 1e-10) -> bool:
    n = C.shape[0] // 2
    J = sigma_matrix(n)
    resid = np.abs(C.T @ J @ C - J).max()
    return bool(resid <= tol * max(1.0, np.abs(C).max() ** 2))


def lct_pushforward(q: QuadraticForm, C, tol: float = 1e-10) -> QuadraticForm:
    """The form q o C^{-1} for a (possibly complex) linear symplectic map C."""
    C = np.asarray(C)
    if not is_symplectic(C, tol):
        raise NotSymplectic("C^T J C != J")
    Ci = np.linalg.inv(C)
    return QuadraticForm(q.n, Ci.T @ q.Q @ Ci)


def kappa_T(n: int) -> np.ndarray:
    """Linear canonical map (y, eta) -> (y - i eta, eta) of the Bargmann transform."""
    eye = np.eye(n)
    return np.block([[eye, -1j * eye], [np.zeros((n, n)), eye]])


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """exp(-J S) for a random real symmetric S: a random real symplectic matrix."""
    S = rng.normal(scale=scale, size=(2 * n, 2 * n))
    S = 0.5 * (S + S.T)
    return la.expm(-sigma_matrix(n) @ S)
