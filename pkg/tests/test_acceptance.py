"""Acceptance criteria, one test each.

Every test prints a single line ``criterion k: PASS|FAIL ...`` with the
measured quantity and the wall time, and the collected lines are repeated in
the terminal summary.  Run standalone with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time

import numpy as np
import pytest
import scipy.sparse as sp

from quadspec.flow_weights import (
    average_min_eig,
    check_escape_identity,
    deform,
    ellipticity_radius,
    flow_average,
    weight_go,
)
from quadspec.hermite import (
    HermiteBasisSpec,
    auto_scales,
    low_spectrum,
    resolvent_scan,
    smallest_singular_value,
    weyl_matrix,
)
from quadspec.models import example_form, example_symbol, harmonic_form, kfp_form, kfp_symbol
from quadspec.symbols import AdmissibleRegion, PolynomialSymbol, verify_double_characteristic
from quadspec.symplectic import analyze, hamilton_map, quadratic_spectrum, singular_space
from quadspec.weights import WeightField, verify_prop1

try:
    from conftest import random_admissible_form, random_partially_elliptic_form
except ImportError:  # standalone run from the repository root
    sys.path.insert(0, "tests")
    from conftest import random_admissible_form, random_partially_elliptic_form

RESULTS: list[str] = []
SEED = 20261015


def report(k: int, passed: bool, detail: str, elapsed: float, limit: float) -> bool:
    ok = passed and elapsed < limit
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.2f} s, limit {limit:g} s]"
    RESULTS.append(line)
    print(line)
    return ok


# ------------------------------------------------------------------ 1


def criterion_1() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    dims = []
    while len(dims) < 100:
        a, b, c = rng.uniform(-2, 2, size=3)
        if b * b + c * c <= 0.01:
            continue
        dims.append(singular_space(hamilton_map(example_form(a, b, c))).dim)
    S = singular_space(hamilton_map(example_form(1.0, 0.0, 0.0)))
    e2 = np.zeros(4)
    e2[1] = 1.0
    align = np.linalg.norm(S.basis[:, 0] - np.sign(S.basis[1, 0]) * e2) if S.dim == 1 else np.inf
    ok = max(dims) == 0 and S.dim == 1 and align <= 1e-8
    detail = f"dim S = 0 for {dims.count(0)}/100 generic members; degenerate dim S = {S.dim}, axis error {align:.1e}"
    return report(1, ok, detail, time.perf_counter() - t0, 1.0)


# ------------------------------------------------------------------ 2


def criterion_2() -> bool:
    t0 = time.perf_counter()
    q = kfp_form(1.0)
    S = singular_space(hamilton_map(q))
    X = np.array([0.0, 0.0, 1.0, 0.0])
    r0 = ellipticity_radius(q)
    qx = abs(q(X))
    rd = ellipticity_radius(deform(q, weight_go(q, 1.0), 0.05))
    ok = S.dim == 0 and qx == 0.0 and r0 <= 1e-8 and rd > 1e-8
    detail = f"dim S = {S.dim}, q(0,0,1,0) = {qx:.1e}, radius {r0:.1e} -> {rd:.3e} after deformation"
    return report(2, ok, detail, time.perf_counter() - t0, 1.0)


# ------------------------------------------------------------------ 3


def criterion_3() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for k in range(100):
        n = 1 + k % 3
        q = random_admissible_form(n, rng, rank=int(rng.integers(1, 2 * n + 1)))
        worst = max(worst, check_escape_identity(q, weight_go(q, 1.0), flow_average(q, 1.0)))
    return report(3, worst < 1e-9, f"max residual {worst:.2e} (T = 1)", time.perf_counter() - t0, 10.0)


# ------------------------------------------------------------------ 4


def _lattice_check(symbol: PolynomialSymbol, levels: int = 30):
    q = symbol.quadratic_part(np.zeros(symbol.dim))
    op = weyl_matrix(symbol, HermiteBasisSpec(symbol.n, levels, scales=auto_scales(symbol)))
    ls = low_spectrum(op, 20, tol_eig=1e-7)
    conv = ls.values[ls.converged]
    if conv.size < 10:
        return False, f"only {conv.size} converged", np.inf
    low = conv[:10]
    radius = abs(low[-1]) + 1e-6
    lat = quadratic_spectrum(q, radius + 1.0)
    err = max(lat.distance(z) for z in low)
    n_lat = sum(abs(p.value) <= radius for p in lat.points)
    n_num = int(np.sum(np.abs(conv) <= radius))
    return err < 1e-6 and n_lat == n_num, f"{n_num}/{n_lat}", err


def criterion_4() -> bool:
    t0 = time.perf_counter()
    cases = {
        "ho": PolynomialSymbol.from_quadratic(harmonic_form(1)),
        "iho": PolynomialSymbol.from_quadratic(harmonic_form(1, 1j)),
        "kfp0.5": kfp_symbol(0.5),
        "kfp1": kfp_symbol(1.0),
        "kfp2": kfp_symbol(2.0),
    }
    parts, ok, worst = [], True, 0.0
    for name, sym in cases.items():
        good, counts, err = _lattice_check(sym)
        ok &= good
        worst = max(worst, err)
        parts.append(f"{name} {counts}")
    detail = f"max distance to lattice {worst:.1e}; window counts num/lattice: " + ", ".join(parts)
    return report(4, ok, detail, time.perf_counter() - t0, 120.0)


# ------------------------------------------------------------------ 5


def criterion_5() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    syms = [kfp_symbol(1.0), kfp_symbol(0.5), PolynomialSymbol.from_quadratic(harmonic_form(2))]
    mats = []
    for sym in syms:
        basis = HermiteBasisSpec(sym.n, 30, scales=auto_scales(sym))
        lattice = quadratic_spectrum(sym.quadratic_part(np.zeros(4)), 8.0)
        Q1 = weyl_matrix(sym, basis).matrix
        Q2 = weyl_matrix(sym, basis.with_levels(60)).matrix
        mats.append((sym, basis, lattice, Q1, Q2))
    worst, n_conv, k = 0.0, 0, 0
    while k < 20:
        sym, basis, lattice, Q1, Q2 = mats[k % len(mats)]
        z = complex(rng.uniform(-1, 3), rng.uniform(-2, 2))
        if lattice.distance(z) < 0.5:
            continue
        h = float(rng.uniform(0.01, 0.5))
        Qh = weyl_matrix(sym, basis.with_h(h)).matrix
        direct = smallest_singular_value(Qh - h * z * sp.identity(Qh.shape[0], format="csr"))
        ref = smallest_singular_value(Q1 - z * sp.identity(Q1.shape[0], format="csr"))
        check = smallest_singular_value(Q2 - z * sp.identity(Q2.shape[0], format="csr"))
        n_conv += abs(check - ref) <= 1e-6 * ref
        worst = max(worst, abs(direct - h * ref) / (h * ref))
        k += 1
    ok = worst < 1e-6 and n_conv == 20
    detail = f"max relative deviation {worst:.1e}; {n_conv}/20 pairs converged at N = 30 vs 60"
    return report(5, ok, detail, time.perf_counter() - t0, 60.0)


# ------------------------------------------------------------------ 6


def kfp_scan_points(region: AdmissibleRegion, count: int = 16) -> list[complex]:
    """The ``count`` admissible points of the 0.5-spaced grid in |z| <= 3 closest to the spectrum."""
    g = np.arange(-3.0, 3.0 + 1e-9, 0.5)
    cand = [complex(a, b) for b in g for a in g if abs(complex(a, b)) <= 3.0 and region(complex(a, b))]
    cand.sort(key=lambda z: (round(region.distance(z), 12), z.real, z.imag))
    return cand[:count]


def criterion_6() -> bool:
    t0 = time.perf_counter()
    p0 = kfp_symbol(1.0)
    cp = verify_double_characteristic(p0, np.zeros(4))
    region = AdmissibleRegion([cp], 0.5, 3.0)
    zs = kfp_scan_points(region)
    basis = HermiteBasisSpec(2, 30, scales=auto_scales(p0))
    scan = resolvent_scan(p0, None, zs, [0.1, 0.05, 0.025], basis, region)
    fits = list(scan.C0_fit.values())
    bounded = all(
        e.s_min_over_h >= 1.0 / scan.C0_fit[e.h] * (1 - 1e-12) for e in scan.entries if e.converged and e.admissible
    )
    n_conv = sum(e.converged for e in scan.entries)
    ok = len(zs) == 16 and None not in fits and bounded and max(fits) / min(fits) < 2
    fit_txt = ", ".join("-" if c is None else f"{c:.4f}" for c in fits)
    detail = f"C0_fit over h = 0.1, 0.05, 0.025: {fit_txt}; {n_conv}/{len(scan.entries)} entries converged"
    return report(6, ok, detail, time.perf_counter() - t0, 300.0)


# ------------------------------------------------------------------ 7


def _gradient_error(W: WeightField, X: np.ndarray, step: float = 1e-5) -> float:
    _, grad = W(X)
    fd = np.array([(W(X + step * e)[0] - W(X - step * e)[0]) / (2 * step) for e in np.eye(X.size)])
    return float(np.linalg.norm(fd - grad) / np.linalg.norm(grad))


def criterion_7() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    eps = 0.01
    W = WeightField(kfp_symbol(1.0), eps, 1.0)
    W_ex = WeightField(example_symbol(0.0, 1.0, 0.0), eps, 1.0)
    G = weight_go(kfp_form(1.0), 1.0).G
    val_err, grad_err, grad_err_ex = 0.0, 0.0, 0.0
    for _ in range(50):
        X = rng.normal(size=4)
        # deep interior: the whole flow line stays inside |X|^2 < eps
        X *= 0.02 / np.linalg.norm(X)
        val, _ = W(X)
        val_err = max(val_err, abs(val - X @ G @ X))
        for field, acc in ((W, "kfp"), (W_ex, "ex")):
            Y = rng.normal(size=4)
            Y *= rng.uniform(0.02, 1.0) / np.linalg.norm(Y)
            e = _gradient_error(field, Y)
            if acc == "kfp":
                grad_err = max(grad_err, e)
            else:
                grad_err_ex = max(grad_err_ex, e)
    ok = val_err < 1e-8 and grad_err < 1e-6 and grad_err_ex < 1e-6
    detail = (
        f"max |G_eps - X^T G X| = {val_err:.1e}; max relative gradient error {grad_err:.1e} (quadratic), "
        f"{grad_err_ex:.1e} (quartic example), 50 points each"
    )
    return report(7, ok, detail, time.perf_counter() - t0, 30.0)


# ------------------------------------------------------------------ 8


def criterion_8() -> bool:
    t0 = time.perf_counter()
    p = example_symbol(0.0, 1.0, 0.0)
    pts = [verify_double_characteristic(p, np.zeros(4))]
    rep = verify_prop1(p, 0.01, 0.05, 1.0, pts)
    finite = all(np.isfinite(v) for it in rep.items for v in it.constants.values())
    rep0 = verify_prop1(p, 0.01, 0.0, 1.0, pts)
    ok = rep.passed and finite and not rep0.item("iv").passed
    items = " ".join(f"{it.name}:{'ok' if it.passed else 'x'}" for it in rep.items)
    detail = f"delta = 0.05 items [{items}]; delta = 0 item iv {'fails' if not rep0.item('iv').passed else 'passes'}"
    return report(8, ok, detail, time.perf_counter() - t0, 120.0)


# ------------------------------------------------------------------ 9


def criterion_9() -> bool:
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = np.inf
    forms = 0
    while forms < 50:
        q = random_partially_elliptic_form(int(rng.integers(1, 4)), rng)
        S, ok = analyze(q)
        if not ok:
            continue
        forms += 1
        for T in (0.25, 1.0, 4.0):
            worst = min(worst, average_min_eig(q, T, S.perp))
    return report(9, worst > 0, f"min eigenvalue on S-perp {worst:.3e} over 50 forms", time.perf_counter() - t0, 30.0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 10)])
def test_acceptance(crit):
    assert crit()


if __name__ == "__main__":
    results = [crit() for crit in CRITERIA]
    sys.exit(0 if all(results) else 1)
