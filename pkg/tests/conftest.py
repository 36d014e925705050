import sys

import numpy as np
import pytest

from quadspec.symplectic import QuadraticForm, random_symplectic, lct_pushforward


def random_admissible_form(n: int, rng: np.random.Generator, rank: int | None = None) -> QuadraticForm:
    """Re Q positive semidefinite of the given rank, Im Q arbitrary symmetric."""
    d = 2 * n
    rank = d if rank is None else rank
    B = rng.normal(size=(d, rank))
    M = rng.normal(size=(d, d))
    return QuadraticForm(n, B @ B.T / d + 1j * (M + M.T) / 2)


def random_partially_elliptic_form(n: int, rng: np.random.Generator) -> QuadraticForm:
    """q' (+) i sign sum lam_j (x''^2 + xi''^2), pushed through a random symplectic map.

    q' lives on the first n' = n - m coordinate pairs and has a rank-one real
    part, so its own singular space is generically trivial; S is then the
    image of the (x'', xi'') block.
    """
    m = int(rng.integers(0, n))
    npr = n - m
    d = 2 * n
    Q = np.zeros((d, d), dtype=complex)
    idx_p = list(range(npr)) + list(range(n, n + npr))
    idx_s = list(range(npr, n)) + list(range(n + npr, d))
    b = rng.normal(size=2 * npr)
    M = rng.normal(size=(2 * npr, 2 * npr))
    Q[np.ix_(idx_p, idx_p)] = np.outer(b, b) + 1j * (M + M.T) / 2
    sign = rng.choice([-1, 1])
    lam = rng.uniform(0.5, 2.0, size=m)
    Q[np.ix_(idx_s, idx_s)] = 1j * sign * np.diag(np.concatenate([lam, lam]))
    C = random_symplectic(n, rng, scale=0.3)
    return lct_pushforward(QuadraticForm(n, Q), C)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
