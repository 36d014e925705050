import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadspec.errors import (
    EllipticityRequired,
    InputError,
    NotSymplectic,
    RankAmbiguity,
)
from quadspec.models import example_form, harmonic_form, kfp_form
from quadspec.symplectic import (
    QuadraticForm,
    _null_space,
    analyze,
    hamilton_map,
    is_symplectic,
    kappa_T,
    lct_pushforward,
    quadratic_spectrum,
    random_symplectic,
    real_eigen_splitting,
    sigma_matrix,
    singular_space,
    symplectic_splitting,
)

from conftest import random_admissible_form, random_partially_elliptic_form


def _forms(max_n=4):
    return st.tuples(st.integers(1, max_n), st.integers(0, 2**32 - 1))


class TestHamiltonMap:
    @given(_forms())
    @settings(max_examples=200, deadline=None)
    def test_defining_identity_and_skewness(self, spec):
        n, seed = spec
        rng = np.random.default_rng(seed)
        Q = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
        q = QuadraticForm(n, Q)
        J = sigma_matrix(n)
        F = hamilton_map(q).F
        assert np.abs(J @ F - q.Q).max() < 1e-12
        assert np.abs(F.T @ J + J @ F).max() < 1e-12
        # sigma(X, F Y) equals the polarized form
        X, Y = rng.normal(size=(2, 2 * n))
        assert abs(X @ J @ F @ Y - q.polar(X, Y)) < 1e-12 * (1 + np.abs(Q).max())

    def test_real_and_imaginary_parts(self, rng):
        q = random_admissible_form(3, rng)
        F = hamilton_map(q)
        assert np.array_equal(F.ReF, hamilton_map(q.re).F.real)
        assert np.array_equal(F.ImF, hamilton_map(q.im).F.real)

    def test_bad_shape_rejected(self):
        with pytest.raises(InputError):
            QuadraticForm(2, np.eye(3))

    def test_from_monomials_matches_evaluation(self):
        q = QuadraticForm.from_monomials(1, [([2, 0], 1.0), ([1, 1], 2j), ([0, 2], 3.0)])
        x, xi = 0.3, -0.7
        assert q(np.array([x, xi])) == pytest.approx(x * x + 2j * x * xi + 3 * xi * xi)


class TestSingularSpace:
    def test_harmonic_is_trivial(self):
        S = singular_space(hamilton_map(harmonic_form(2)))
        assert S.dim == 0
        assert S.perp.shape == (4, 4)

    def test_kfp_trivial_with_two_kernels(self):
        F = hamilton_map(kfp_form(1.0))
        assert singular_space(F).dim == 0
        assert singular_space(F, powers=2).dim == 0
        # one kernel alone is not enough
        assert singular_space(F, powers=1).dim == 2

    def test_example_degenerate_case_is_x2_axis(self):
        S = singular_space(hamilton_map(example_form(0.7, 0.0, 0.0)))
        assert S.dim == 1
        e2 = np.array([0.0, 1.0, 0.0, 0.0])
        assert abs(abs(S.basis[:, 0] @ e2) - 1) < 1e-8

    def test_contained_in_kernel_of_real_part(self, rng):
        for _ in range(50):
            q = random_partially_elliptic_form(int(rng.integers(1, 4)), rng)
            S = singular_space(hamilton_map(q))
            if S.dim:
                assert np.linalg.norm(q.Q.real @ S.basis) < 1e-9

    def test_perp_is_symplectic_complement(self, rng):
        for _ in range(20):
            q = random_partially_elliptic_form(3, rng)
            S = singular_space(hamilton_map(q))
            J = sigma_matrix(3)
            assert S.dim + S.perp.shape[1] == 6
            if S.dim:
                assert np.abs(S.basis.T @ J @ S.perp).max() < 1e-8

    def test_rank_ambiguity(self):
        A = np.diag([1.0, 1e-10])
        with pytest.raises(RankAmbiguity):
            _null_space(A, 1e-10)

    def test_real_eigen_splitting_matches_singular_space(self, rng):
        for _ in range(20):
            q = random_partially_elliptic_form(3, rng)
            F = hamilton_map(q)
            S = singular_space(F)
            parts = real_eigen_splitting(F, S=S)
            assert sum(b.shape[1] for _, b in parts) == S.dim


class TestEllipticity:
    def test_kfp_vacuous(self):
        S, ok = analyze(kfp_form())
        assert ok and S.dim == 0

    def test_example_degenerate_case_fails(self):
        _, ok = analyze(example_form(0.0, 0.0, 0.0))
        assert not ok

    def test_williamson_on_constructed_block(self):
        Q = np.zeros((4, 4), dtype=complex)
        Q[np.ix_([0, 2], [0, 2])] = kfp_form().Q[np.ix_([1, 3], [1, 3])] + 1j * np.array([[0, 0.3], [0.3, 0]])
        Q[1, 1] = Q[3, 3] = 1j
        q = QuadraticForm(2, Q)
        S, ok = analyze(q)
        assert ok and S.dim == 2
        assert S.williamson.sign == 1
        assert np.allclose(S.williamson.freqs, [1.0])
        C = symplectic_splitting(q, S)
        assert is_symplectic(C, 1e-10)
        Qs = C.T @ q.Q @ C
        # coordinates (x', x'', xi', xi''): off-diagonal blocks vanish
        p, s = [0, 2], [1, 3]
        assert np.abs(Qs[np.ix_(p, s)]).max() < 1e-10

    def test_splitting_after_random_conjugation(self, rng):
        for _ in range(10):
            q = random_partially_elliptic_form(3, rng)
            S, ok = analyze(q)
            assert ok
            C = symplectic_splitting(q, S)
            Qs = C.T @ q.Q @ C
            n, m = 3, S.dim // 2
            npr = n - m
            p = list(range(npr)) + list(range(n, n + npr))
            s = list(range(npr, n)) + list(range(n + npr, 2 * n))
            if p and s:
                assert np.abs(Qs[np.ix_(p, s)]).max() < 1e-7


class TestSpectrum:
    def test_harmonic(self):
        lat = quadratic_spectrum(harmonic_form(1), 10)
        assert np.allclose(np.sort(lat.values().real), [1, 3, 5, 7, 9])
        assert np.abs(lat.values().imag).max() < 1e-12

    def test_imaginary_harmonic(self):
        lat = quadratic_spectrum(harmonic_form(1, 1j), 10)
        assert np.allclose(np.sort(lat.values().imag), [1, 3, 5, 7, 9])
        assert np.abs(lat.values().real).max() < 1e-12

    def test_two_dimensional_harmonic(self):
        # one generator of multiplicity 2: ground 2, then steps of 2
        lat = quadratic_spectrum(harmonic_form(2), 6.5)
        assert lat.generators[0][1] == 2
        assert sorted(np.round(lat.values().real, 8)) == [2, 4, 6]

    def test_kfp_ground_and_generators(self):
        lat = quadratic_spectrum(kfp_form(1.0), 5)
        assert lat.ground == pytest.approx(0.5)
        mus = sorted((2 * mu for mu, _ in lat.generators), key=lambda z: z.imag)
        assert mus[0] == pytest.approx((1 - 1j * np.sqrt(3)) / 2)
        assert mus[1] == pytest.approx((1 + 1j * np.sqrt(3)) / 2)

    def test_lattice_points_recomputed_from_k(self):
        lat = quadratic_spectrum(kfp_form(2.0), 8)
        for p in lat.points:
            v = lat.ground + 2 * sum(k * mu for k, (mu, _) in zip(p.k, lat.generators))
            assert abs(v - p.value) < 1e-12

    def test_requires_partial_ellipticity(self):
        with pytest.raises(EllipticityRequired):
            quadratic_spectrum(example_form(0.0, 0.0, 0.0), 5)
        with pytest.raises(EllipticityRequired):
            quadratic_spectrum(QuadraticForm(1, -np.eye(2)), 5)

    def test_invariant_under_symplectic_conjugation(self, rng):
        for _ in range(10):
            q = random_partially_elliptic_form(2, rng)
            C = random_symplectic(2, rng, 0.3)
            a = np.sort_complex(quadratic_spectrum(q, 6).values())
            b = np.sort_complex(quadratic_spectrum(lct_pushforward(q, C), 6).values())
            assert a.size == b.size
            assert np.abs(a - b).max() < 1e-6


class TestLinearCanonical:
    def test_identity(self, rng):
        q = random_admissible_form(2, rng)
        assert np.allclose(lct_pushforward(q, np.eye(4)).Q, q.Q)

    def test_kappa_T_on_harmonic(self):
        q = harmonic_form(1)
        out = lct_pushforward(q, kappa_T(1))
        # y = x + i xi: (x + i xi)^2 + xi^2
        expected = QuadraticForm.from_monomials(1, [([2, 0], 1.0), ([1, 1], 2j), ([0, 2], 0.0)])
        assert np.allclose(out.Q, expected.Q)

    def test_round_trip(self, rng):
        q = random_admissible_form(2, rng)
        K = kappa_T(2)
        back = lct_pushforward(lct_pushforward(q, K), np.linalg.inv(K))
        assert np.abs(back.Q - q.Q).max() < 1e-12

    def test_rejects_non_symplectic(self):
        with pytest.raises(NotSymplectic):
            lct_pushforward(harmonic_form(1), np.diag([2.0, 2.0]))
