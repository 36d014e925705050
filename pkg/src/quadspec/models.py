"""Named quadratic forms and symbols used in examples and tests.

Coordinates are ordered (x_1..x_n, xi_1..xi_n).  The Kramers-Fokker-Planck
model has n = 2 with x_1 = x (position), x_2 = v (velocity) and duals
(xi, eta).
"""

from __future__ import annotations

import numpy as np

from .symbols import PolynomialSymbol
from .symplectic import QuadraticForm

__all__ = [
    "harmonic_form",
    "kfp_form",
    "kfp_symbol",
    "example_form",
    "example_symbol",
    "two_well_symbol",
]


def harmonic_form(n: int = 1, scale: complex = 1.0) -> QuadraticForm:
    """scale * sum_j (x_j^2 + xi_j^2)."""
    return QuadraticForm(n, scale * np.eye(2 * n))


def kfp_symbol(a: float = 1.0) -> PolynomialSymbol:
    """eta^2 + v^2/4 + i (v xi - a x eta)."""
    return PolynomialSymbol(
        2,
        {
            (0, 0, 0, 2): 1.0,
            (0, 2, 0, 0): 0.25,
            (0, 1, 1, 0): 1j,
            (1, 0, 0, 1): -1j * a,
        },
    )


def kfp_form(a: float = 1.0) -> QuadraticForm:
    return kfp_symbol(a).quadratic_part(np.zeros(4))


def example_symbol(alpha: float = 0.0, beta: float = 1.0, gamma: float = 0.0) -> PolynomialSymbol:
    """xi_1^2 + xi_2^2 + x_1^2 + x_2^4 + i (alpha x_1^2 + 2 beta x_1 x_2 + gamma x_2^2 + x_1^3).

    A doubly characteristic point sits at the origin; the quartic and cubic
    terms make the symbol genuinely non-quadratic.
    """
    return PolynomialSymbol(
        2,
        {
            (0, 0, 2, 0): 1.0,
            (0, 0, 0, 2): 1.0,
            (2, 0, 0, 0): 1.0 + 1j * alpha,
            (0, 4, 0, 0): 1.0,
            (1, 1, 0, 0): 2j * beta,
            (0, 2, 0, 0): 1j * gamma,
            (3, 0, 0, 0): 1j,
        },
    )


def example_form(alpha: float, beta: float, gamma: float) -> QuadraticForm:
    """Quadratic part at 0 of :func:`example_symbol`."""
    return example_symbol(alpha, beta, gamma).quadratic_part(np.zeros(4))


def two_well_symbol() -> PolynomialSymbol:
    """xi^2 + (x^2 - 1)^2, with double zeros at (+-1, 0)."""
    return PolynomialSymbol(1, {(0, 2): 1.0, (4, 0): 1.0, (2, 0): -2.0, (0, 0): 1.0})
