"""Hermite-Galerkin matrices of Weyl-quantized polynomial symbols.

In the h-adapted Hermite basis,

    x_j = sqrt(h/2) (a_j + a_j^*),    hD_{x_j} = (sqrt(h/2)/i) (a_j - a_j^*),

and the Weyl quantization of x^a xi^b (one dimension) is the average of the
X/P words over all C(a+b, a) placements of the X factors.  Ladder products are
formed in a basis padded by the degree and then cut to N levels, so each
entry equals the exact matrix element of the untruncated operator.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BasisCap, InputError
from .symbols import PolynomialSymbol

log = logging.getLogger(__name__)

__all__ = [
    "HermiteBasisSpec",
    "OperatorMatrix",
    "LowSpectrum",
    "ResolventEntry",
    "ResolventScan",
    "weyl_matrix",
    "weyl_monomial_1d",
    "is_quadratic_form_symbol",
    "auto_scales",
    "low_spectrum",
    "smallest_singular_value",
    "resolvent_scan",
    "DENSE_LIMIT",
]

DEFAULT_CAP = 20000
# matrices up to this size are handled with dense LAPACK
DENSE_LIMIT = 1500


@dataclass(frozen=True)
class HermiteBasisSpec:
    n: int
    levels: int
    h: float = 1.0
    cap: int = DEFAULT_CAP
    scales: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.scales is not None:
            sc = tuple(float(v) for v in self.scales)
            if len(sc) != self.n or min(sc) <= 0:
                raise InputError("scales must be n positive numbers")
            object.__setattr__(self, "scales", sc)
        if self.n < 1:
            raise InputError("n must be positive")
        if self.levels < 4:
            raise InputError("need at least 4 Hermite levels per dimension")
        if not self.h > 0:
            raise InputError("h must be positive")
        if self.size > self.cap:
            raise BasisCap(f"basis size {self.levels}^{self.n} = {self.size} exceeds cap {self.cap}")

    @property
    def size(self) -> int:
        return self.levels**self.n

    def scale(self, j: int) -> float:
        return 1.0 if self.scales is None else self.scales[j]

    def with_levels(self, levels: int) -> "HermiteBasisSpec":
        return HermiteBasisSpec(self.n, levels, self.h, self.cap, self.scales)

    def with_h(self, h: float) -> "HermiteBasisSpec":
        return HermiteBasisSpec(self.n, self.levels, h, self.cap, self.scales)


@dataclass
class OperatorMatrix:
    matrix: sp.csr_matrix
    symbol: PolynomialSymbol
    basis: HermiteBasisSpec

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _ladders(M: int, h: float, scale: float = 1.0):
    k = np.sqrt(np.arange(1, M))
    a = sp.diags(k, 1, shape=(M, M), format="csr", dtype=complex)
    ad = a.T.tocsr()
    s = np.sqrt(h / 2)
    return (scale * s) * (a + ad), (s / (1j * scale)) * (a - ad)


def weyl_monomial_1d(a: int, b: int, N: int, h: float, scale: float = 1.0) -> sp.csr_matrix:
    """N x N matrix of (x^a xi^b)^w in one dimension.

    ``scale`` dilates the Hermite functions (x -> x / scale), a unitary
    change of basis that leaves spectra and singular values unchanged.
    """
    M = N + a + b
    X, P = _ladders(M, h, scale)
    acc = sp.csr_matrix((M, M), dtype=complex)
    if a + b == 0:
        return sp.identity(N, dtype=complex, format="csr")
    for pos in itertools.combinations(range(a + b), a):
        word = sp.identity(M, dtype=complex, format="csr")
        xs = set(pos)
        for k in range(a + b):
            word = word @ (X if k in xs else P)
        acc = acc + word
    acc = acc / comb(a + b, a)
    return acc[:N, :N].tocsr()


def weyl_matrix(symbol: PolynomialSymbol, basis: HermiteBasisSpec, max_degree: int = 6) -> OperatorMatrix:
    """Truncated matrix of the h-Weyl quantization of a polynomial symbol.

    Multi-indices run over dimension 1 slowest (row-major Kronecker order).
    """
    n, N, h = basis.n, basis.levels, basis.h
    if symbol.n != n:
        raise InputError(f"symbol has n={symbol.n}, basis has n={n}")
    if symbol.degree > max_degree:
        raise InputError(f"symbol degree {symbol.degree} exceeds {max_degree}")
    cache: dict[tuple, sp.csr_matrix] = {}

    def factor(j, a, b):
        key = (basis.scale(j), a, b)
        if key not in cache:
            cache[key] = weyl_monomial_1d(a, b, N, h, basis.scale(j))
        return cache[key]

    total = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for e, c in symbol.terms.items():
        term = sp.identity(1, dtype=complex, format="csr")
        for j in range(n):
            term = sp.kron(term, factor(j, e[j], e[n + j]), format="csr")
        total = total + c * term
    return OperatorMatrix(matrix=total.tocsr(), symbol=symbol, basis=basis)


def auto_scales(symbol: PolynomialSymbol) -> tuple[float, ...]:
    """Per-dimension dilations balancing the x_j and xi_j rows of the Hessian at 0.

    s_j = (|row xi_j| / |row x_j|)^(1/2), or 1 when either row vanishes.  A
    heuristic: it only affects how fast the truncation converges.
    """
    H = np.abs(symbol.hessian(np.zeros(symbol.dim)))
    n = symbol.n
    out = []
    for j in range(n):
        rx, rxi = np.linalg.norm(H[j]), np.linalg.norm(H[n + j])
        out.append(float((rxi / rx) ** 0.5) if rx > 0 and rxi > 0 else 1.0)
    return tuple(out)


def is_quadratic_form_symbol(symbol: PolynomialSymbol) -> bool:
    """True when every monomial has total degree exactly 2."""
    return bool(symbol.terms) and all(sum(e) == 2 for e in symbol.terms)


# ---------------------------------------------------------------- spectra


@dataclass
class LowSpectrum:
    values: np.ndarray
    converged: np.ndarray
    shifts: np.ndarray
    levels: int
    check_levels: int


def _eigs_small(A: sp.spmatrix, count: int) -> np.ndarray:
    if A.shape[0] <= DENSE_LIMIT:
        ev = la.eigvals(A.toarray())
    else:
        k = min(A.shape[0] - 2, count + 10)
        ev = spla.eigs(A.tocsc(), k=k, sigma=0.0, which="LM", return_eigenvectors=False, tol=1e-13)
    return ev[np.argsort(np.abs(ev), kind="stable")]


def low_spectrum(op: OperatorMatrix, count: int, tol_eig: float = 1e-7) -> LowSpectrum:
    """The ``count`` eigenvalues of smallest modulus with convergence flags.

    Each eigenvalue is flagged converged when the nearest eigenvalue of the
    same operator truncated at twice the levels is within ``tol_eig``.
    """
    if count < 1:
        raise InputError("count must be positive")
    ev = _eigs_small(op.matrix, count)[:count]
    big = weyl_matrix(op.symbol, op.basis.with_levels(2 * op.basis.levels))
    ev2 = _eigs_small(big.matrix, count + 10)
    shifts = np.array([np.abs(ev2 - z).min() for z in ev])
    return LowSpectrum(
        values=ev,
        converged=shifts < tol_eig,
        shifts=shifts,
        levels=op.basis.levels,
        check_levels=2 * op.basis.levels,
    )


def smallest_singular_value(A) -> float:
    """s_min of a square matrix: dense SVD when small, inverse iteration otherwise."""
    if sp.issparse(A) and A.shape[0] > DENSE_LIMIT:
        lu = spla.splu(A.tocsc().astype(complex))

        def mv(x):
            return lu.solve(lu.solve(x), trans="H")

        op = spla.LinearOperator(A.shape, matvec=mv, dtype=complex)
        top = spla.eigsh(op, k=1, which="LA", tol=1e-13, return_eigenvectors=False)
        return float(1.0 / np.sqrt(top[0].real))
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    return float(la.svdvals(dense)[-1])


@dataclass
class ResolventEntry:
    z: complex
    h: float
    s_min: float
    s_min_check: float
    converged: bool
    admissible: bool

    @property
    def s_min_over_h(self) -> float:
        return self.s_min / self.h


@dataclass
class ResolventScan:
    entries: list[ResolventEntry]
    levels: int
    tol_conv: float
    C0_fit: dict = field(default_factory=dict)

    def rows(self):
        for e in self.entries:
            yield {
                "z_re": e.z.real,
                "z_im": e.z.imag,
                "h": e.h,
                "s_min": e.s_min,
                "s_min_over_h": e.s_min_over_h,
                "converged": e.converged,
                "admissible": e.admissible,
            }


def _operator(symbol, sub, basis):
    P = weyl_matrix(symbol, basis).matrix
    if sub is not None and sub.terms:
        P = P + basis.h * weyl_matrix(sub, basis).matrix
    return P.tocsr()


def resolvent_scan(
    symbol: PolynomialSymbol,
    sub: PolynomialSymbol | None,
    z_grid,
    h_list,
    basis: HermiteBasisSpec,
    region=None,
    tol_conv: float = 1e-6,
) -> ResolventScan:
    """s_min(P - h z) over a grid of z and h, with P = p0^w + h p1^w.

    Every entry is recomputed with twice the levels and flagged converged
    when the relative change is below ``tol_conv``.  ``C0_fit[h]`` is the
    largest h / s_min over admissible, converged entries (None if there are
    none).  ``region`` is any predicate on z; without one every z counts as
    admissible.
    """
    z_grid = [complex(z) for z in z_grid]
    h_list = [float(h) for h in h_list]
    if not z_grid:
        raise InputError("empty grid")
    if not h_list or any(h <= 0 for h in h_list):
        raise InputError("h list must be nonempty and positive")
    fine_basis = basis.with_levels(2 * basis.levels)
    adm = {z: (True if region is None else bool(region(z))) for z in z_grid}
    entries = []
    for h in h_list:
        P = _operator(symbol, sub, basis.with_h(h))
        P2 = _operator(symbol, sub, fine_basis.with_h(h))
        I1 = sp.identity(P.shape[0], dtype=complex, format="csr")
        I2 = sp.identity(P2.shape[0], dtype=complex, format="csr")
        for z in z_grid:
            s1 = smallest_singular_value(P - h * z * I1)
            s2 = smallest_singular_value(P2 - h * z * I2)
            conv = abs(s1 - s2) <= tol_conv * max(s2, np.finfo(float).tiny)
            entries.append(ResolventEntry(z, h, s1, s2, bool(conv), adm[z]))
    fit = {}
    for h in h_list:
        good = [e for e in entries if e.h == h and e.admissible and e.converged]
        fit[h] = max((h / e.s_min for e in good), default=None) if good else None
    n_bad = sum(not e.converged for e in entries)
    if n_bad:
        log.warning("%d of %d resolvent entries did not converge", n_bad, len(entries))
    return ResolventScan(entries=entries, levels=basis.levels, tol_conv=tol_conv, C0_fit=fit)
