"""Fock statistics: frozen oracles, limits, and cross-route agreement."""

import math

import numpy as np
import pytest

from qgs.errors import (
    DegeneracyError,
    DomainError,
    InsufficientCountsError,
)
from qgs.fock_stats import (
    CoeffSet,
    FockIndex,
    JointPND,
    classical_g2,
    classical_g2_closed,
    coeffs,
    joint_pnd,
    joint_pnd_degenerate,
    moment_integral_closed,
    rho_element,
    rho_element_quadrature,
    single_mode_pnd,
    vacuum_identity_check,
    wavepacket_g2,
)
from qgs.mc_oracle import SamplerConfig, empirical_pnd
from qgs.source_model import TwoPointParams

from oracles import dblquad_moment, fit_exponent_coefficients


class TestCoeffs:
    def test_uncorrelated_centered(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.0, mu1=0j, mu2=0j)
        c = coeffs(p, "real")
        assert (c.x, c.y, c.z) == (2.0, 2.0, 0.0)
        assert (c.u, c.v, c.w) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("g", [0.0, 0.4, 0.9, 0.9999])
    def test_positive_definite_exponent(self, g):
        p = TwoPointParams(n1=0.6, n2=2.4, g=g, mu1=1 + 1j, mu2=-0.5j)
        for comp in ("real", "imag"):
            c = coeffs(p, comp)
            assert c.discriminant() > 0
            assert c.x * c.y - c.z * c.z == pytest.approx(c.discriminant(), rel=1e-7)

    def test_frozen_substitution(self):
        # n1=2, n2=0.5, g=0.6, mu1=1, mu2=0 (real component)
        p = TwoPointParams(n1=2.0, n2=0.5, g=0.6, mu1=1.0 + 0j, mu2=0j)
        c = coeffs(p, "real")
        assert c.x == pytest.approx(1.78125, rel=1e-14)
        assert c.y == pytest.approx(4.125, rel=1e-14)
        assert c.z == pytest.approx(0.9375, rel=1e-14)
        assert c.u == pytest.approx(1.5625, rel=1e-14)
        assert c.v == pytest.approx(-1.875, rel=1e-14)
        assert c.w == pytest.approx(-0.78125, rel=1e-14)

    def test_rederivation_from_exponent(self):
        # rebuild (x..w) numerically from the shifted-Gaussian exponent plus
        # the detector kernel, and compare with the analytic coefficients
        p = TwoPointParams(n1=1.3, n2=0.7, g=0.55, mu1=0.8 + 0j, mu2=-0.4 + 0j)
        mu, eta = p.mu1.real, p.mu2.real
        omg = 1 - p.g * p.g
        X = 1.0 / (p.n1 * omg)
        Y = 1.0 / (p.n2 * omg)
        Z = p.g / (math.sqrt(p.n1 * p.n2) * omg)

        def expo(a, b):
            return (
                -((a - mu) ** 2) * X
                - ((b - eta) ** 2) * Y
                + 2 * Z * (a - mu) * (b - eta)
                - a * a
                - b * b
            )

        x, y, z, u, v, w = fit_exponent_coefficients(expo)
        c = coeffs(p, "real")
        assert c.x == pytest.approx(x, rel=1e-10)
        assert c.y == pytest.approx(y, rel=1e-10)
        assert c.z == pytest.approx(z, rel=1e-10)
        assert c.u == pytest.approx(u, rel=1e-10, abs=1e-12)
        assert c.v == pytest.approx(v, rel=1e-10, abs=1e-12)
        assert c.w == pytest.approx(w, rel=1e-10, abs=1e-12)

    def test_component_selector(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.3, mu1=1.0 + 2.0j, mu2=0.5 - 1.0j)
        cr = coeffs(p, "real")
        ci = coeffs(p, "imag")
        assert (cr.x, cr.y, cr.z) == (ci.x, ci.y, ci.z)
        assert cr.u != ci.u
        with pytest.raises(DomainError):
            coeffs(p, "modulus")

    def test_degeneracy(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=1.0, mu1=0j, mu2=0j)
        with pytest.raises(DegeneracyError):
            coeffs(p, "real")


class TestMomentIntegralClosed:
    def test_separable_unit(self):
        c = CoeffSet(x=1.0, y=1.0, z=0.0, u=0.0, v=0.0, w=0.0)
        assert moment_integral_closed(c, 0, 0) == pytest.approx(math.pi, rel=1e-13)

    def test_odd_moment_vanishes(self):
        c = CoeffSet(x=1.0, y=1.0, z=0.3, u=0.0, v=0.0, w=0.0)
        assert moment_integral_closed(c, 1, 0) == pytest.approx(0.0, abs=1e-15)

    def test_frozen_dblquad_oracle(self):
        # 2D adaptive quadrature over [-15, 15]^2, tolerance 1e-10
        c = CoeffSet(x=2.0, y=2.0, z=0.5, u=0.3, v=-0.1, w=0.0)
        assert moment_integral_closed(c, 2, 3) == pytest.approx(
            0.010164382446093766, rel=1e-10
        )

    @pytest.mark.parametrize(
        "c,N,M",
        [
            (CoeffSet(1.5, 2.2, 0.7, 0.4, 0.6, 0.1), 1, 2),
            (CoeffSet(2.0, 3.0, 0.9, 1.0, -2.0, -0.3), 3, 3),
            (CoeffSet(2.0, 2.0, 1e-6, 0.3, -0.4, 0.0), 2, 2),
            (CoeffSet(2.0, 1.0, -0.3, -0.5, 0.8, 0.0), 0, 1),
        ],
    )
    def test_against_dblquad(self, c, N, M):
        ref, err = dblquad_moment(c.x, c.y, c.z, c.u, c.v, c.w, N, M)
        assert err < 1e-10 * (1 + abs(ref))
        assert moment_integral_closed(c, N, M) == pytest.approx(ref, rel=1e-9)

    def test_invalid_sets_rejected(self):
        with pytest.raises(DomainError):
            CoeffSet(x=-1.0, y=1.0, z=0.0, u=0.0, v=0.0, w=0.0)
        with pytest.raises(DomainError):
            CoeffSet(x=1.0, y=1.0, z=1.2, u=0.0, v=0.0, w=0.0)


@pytest.fixture(scope="module")
def generic_params():
    return TwoPointParams(n1=1.0, n2=1.0, g=0.5, mu1=0.5 + 0j, mu2=0.5j)


class TestRhoElement:
    def test_thermal_vacuum(self):
        p = TwoPointParams(n1=1.5, n2=1.5, g=0.0, mu1=0j, mu2=0j)
        val = rho_element(p, FockIndex(0, 0, 0, 0))
        assert val.real == pytest.approx(1.0 / (1 + 1.5) ** 2, rel=1e-12)
        assert val.imag == 0.0

    def test_vacuum_general_g_closed_form(self):
        # at mu = 0 the vacuum weight is 1/((1+n1)(1+n2) - g^2 n1 n2)
        for g in (0.0, 0.5, 0.9):
            p = TwoPointParams(n1=0.8, n2=1.7, g=g, mu1=0j, mu2=0j)
            expected = 1.0 / ((1 + 0.8) * (1 + 1.7) - g * g * 0.8 * 1.7)
            assert rho_element(p, FockIndex(0, 0, 0, 0)).real == pytest.approx(
                expected, rel=1e-12
            )

    @pytest.mark.parametrize("g", [0.0, 0.4, 0.9])
    def test_offdiagonals_vanish_at_zero_mean(self, g):
        p = TwoPointParams(n1=1.0, n2=0.5, g=g, mu1=0j, mu2=0j)
        for idx in [(1, 0, 0, 0), (2, 1, 1, 0), (3, 0, 1, 0), (2, 2, 1, 1)]:
            assert rho_element(p, FockIndex(*idx)) == 0
        # diagonals survive
        assert rho_element(p, FockIndex(1, 1, 1, 1)).real > 0

    def test_hermiticity_grid(self, generic_params):
        for N in range(4):
            for M in range(3):
                for K in range(4):
                    for L in range(3):
                        a = rho_element(generic_params, FockIndex(N, M, K, L))
                        b = rho_element(generic_params, FockIndex(K, L, N, M))
                        assert abs(a - b.conjugate()) < 1e-10

    def test_diagonal_positivity(self, generic_params):
        for N in range(6):
            for M in range(6):
                val = rho_element(generic_params, FockIndex(N, M, N, M))
                assert val.real >= -1e-10
                assert abs(val.imag) < 1e-14

    def test_max_order_contract(self, generic_params):
        with pytest.raises(DomainError):
            rho_element(generic_params, FockIndex(20, 20, 20, 20), max_order=64)

    def test_derived_against_mc(self, generic_params):
        # Poisson mixing over joint field samples as the brute-force route
        pnd = joint_pnd(generic_params, 6)
        emp = empirical_pnd(
            SamplerConfig(params=generic_params, n_samples=2_000_000, seed=424242)
        )
        val = rho_element(generic_params, FockIndex(1, 1, 1, 1)).real
        phat = emp.counts[1, 1] / emp.total
        se = math.sqrt(phat * (1 - phat) / emp.total)
        assert abs(val - phat) < 4 * se


class TestRhoElementQuadrature:
    def test_two_mode_thermal_vacuum(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.0, mu1=0j, mu2=0j)
        assert rho_element_quadrature(p, FockIndex(0, 0, 0, 0)).real == pytest.approx(
            0.25, rel=1e-10
        )

    def test_offdiagonal_zero_mean(self):
        p = TwoPointParams(n1=0.7, n2=1.1, g=0.5, mu1=0j, mu2=0j)
        assert abs(rho_element_quadrature(p, FockIndex(1, 0, 0, 0))) < 1e-12

    def test_matches_closed_form(self, generic_params):
        idx = FockIndex(2, 1, 2, 1)
        a = rho_element(generic_params, idx)
        b = rho_element_quadrature(generic_params, idx)
        assert abs(a - b) <= 1e-8 * (1 + abs(a))

    def test_order_bound(self, generic_params):
        with pytest.raises(DomainError):
            rho_element_quadrature(generic_params, FockIndex(8, 8, 8, 8))


class TestSingleModePnd:
    def test_bose_einstein(self):
        p = single_mode_pnd(1.0, 0j, 8)
        for n in range(9):
            assert p[n] == pytest.approx(0.5 ** (n + 1), rel=1e-12)

    def test_poisson(self):
        p = single_mode_pnd(0.0, 1.0 + 0j, 10)
        for n in range(11):
            assert p[n] == pytest.approx(math.exp(-1.0) / math.factorial(n), rel=1e-12)

    def test_derived_against_mc(self):
        # 1D Monte Carlo: Poisson mixing over a single displaced Gaussian
        rng = np.random.default_rng(11)
        nbar, mu = 0.5, 1.0
        z = rng.standard_normal((2, 2_000_000))
        alpha = mu + math.sqrt(nbar / 2) * (z[0] + 1j * z[1])
        counts = rng.poisson(np.abs(alpha) ** 2)
        emp = np.bincount(counts, minlength=12)[:12] / counts.size
        ref = single_mode_pnd(nbar, mu, 11)
        se = np.sqrt(ref * (1 - ref) / counts.size)
        assert np.all(np.abs(emp - ref) < 5 * se + 1e-9)

    def test_normalization(self):
        p = single_mode_pnd(0.8, 1.2 - 0.3j, 60)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)


class TestJointPnd:
    def test_thermal_product(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.0, mu1=0j, mu2=0j)
        pnd = joint_pnd(p, 6)
        for n in range(5):
            for m in range(5):
                assert pnd.p[n, m] == pytest.approx(2.0 ** (-n - m - 2), rel=1e-10)

    def test_normalization_improves_with_truncation(self):
        p = TwoPointParams(n1=0.9, n2=0.9, g=0.7, mu1=0.5 + 0j, mu2=0.5 + 0j)
        masses = [
            float(np.sum(joint_pnd(p, 4, tail_tol=tol).p))
            for tol in (1e-4, 1e-6, 1e-8)
        ]
        assert masses[0] < masses[1] < masses[2]
        assert masses[2] == pytest.approx(1.0, abs=1e-8)

    def test_factorization_at_g_zero(self):
        p = TwoPointParams(n1=0.8, n2=1.3, g=0.0, mu1=0.7 + 0.2j, mu2=-0.3 + 0.5j)
        pnd = joint_pnd(p, 8)
        m1 = single_mode_pnd(p.n1, p.mu1, pnd.n_max)
        m2 = single_mode_pnd(p.n2, p.mu2, pnd.n_max)
        assert np.max(np.abs(pnd.p - np.outer(m1, m2))) < 1e-9

    def test_split_thermal_limit(self):
        # g -> 1 with zero mean approaches binomial splitting of a
        # Bose-Einstein distribution of the summed mean
        p = TwoPointParams(n1=0.7, n2=0.4, g=1 - 1e-6, mu1=0j, mu2=0j)
        pnd = joint_pnd(p, 10)
        nm = pnd.n_max
        split = joint_pnd_degenerate(
            TwoPointParams(n1=0.7, n2=0.4, g=1.0, mu1=0j, mu2=0j), nm
        )
        tv = 0.5 * np.abs(pnd.p - split).sum()
        assert tv < 1e-3

    @pytest.mark.parametrize("g", [0.0, 0.3, 0.8, 0.99])
    def test_marginal_consistency(self, g):
        p = TwoPointParams(n1=0.9, n2=0.6, g=g, mu1=0.8 + 0j, mu2=0.5 + 0j)
        pnd = joint_pnd(p, 6, tail_tol=1e-9)
        marg1 = pnd.p.sum(axis=1)
        ref1 = single_mode_pnd(p.n1, p.mu1, pnd.n_max)
        assert np.max(np.abs(marg1 - ref1)) < 1e-8
        marg2 = pnd.p.sum(axis=0)
        ref2 = single_mode_pnd(p.n2, p.mu2, pnd.n_max)
        assert np.max(np.abs(marg2 - ref2)) < 1e-8

    def test_derived_against_mc(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.9, mu1=0.8 + 0j, mu2=0.8 + 0j)
        pnd = joint_pnd(p, 8)
        emp = empirical_pnd(SamplerConfig(params=p, n_samples=2_000_000, seed=777))
        k = min(pnd.n_max + 1, emp.counts.shape[0], emp.counts.shape[1])
        tv = 0.5 * np.abs(emp.counts[:k, :k] / emp.total - pnd.p[:k, :k]).sum()
        assert tv < 7e-3  # statistical floor at 2e6 samples

    def test_degenerate_dispatch(self):
        p = TwoPointParams(n1=0.8, n2=0.8, g=1.0, mu1=0.9 + 0j, mu2=0.9 + 0j)
        pnd = joint_pnd(p, 8)
        assert pnd.tail_mass < 1e-6
        assert np.all(pnd.p >= 0)

    def test_degenerate_requires_consistent_amplitudes(self):
        p = TwoPointParams(n1=0.5, n2=2.0, g=1.0, mu1=1.0 + 0j, mu2=1.0 + 0j)
        with pytest.raises(DegeneracyError):
            joint_pnd(p, 4)


class TestWavepacketG2:
    def test_independent_all_pairs(self):
        p = TwoPointParams(n1=0.7, n2=1.2, g=0.0, mu1=0.4 + 0j, mu2=0.9 + 0j)
        pnd = joint_pnd(p, 6)
        for pair in [(0, 0), (1, 2), (3, 1), (4, 4)]:
            assert wavepacket_g2(pnd, *pair) == pytest.approx(1.0, abs=1e-9)

    def test_bunching_antibunching_pattern(self):
        p = TwoPointParams(n1=0.83, n2=0.83, g=1 - 1e-7, mu1=1.0 + 0j, mu2=1.0 + 0j)
        pnd = joint_pnd(p, 10)
        for n in (0, 1, 5, 8):
            assert wavepacket_g2(pnd, n, n) > 1.0
        for n in (5, 8):
            assert wavepacket_g2(pnd, n, 1) < 1.0

    def test_derived_anticorrelated_pair_vs_mc(self):
        p = TwoPointParams(n1=1.0, n2=1.0, g=0.9, mu1=1.0 + 0j, mu2=1.0 + 0j)
        pnd = joint_pnd(p, 8)
        val = wavepacket_g2(pnd, 5, 1)
        assert val < 1.0
        from qgs.mc_oracle import empirical_g2

        emp = empirical_pnd(SamplerConfig(params=p, n_samples=2_000_000, seed=31415))
        est = empirical_g2(emp, 5, 1)
        assert abs(est.estimate - val) < 4 * est.std_error

    def test_marginal_floor(self):
        p = TwoPointParams(n1=0.01, n2=0.01, g=0.0, mu1=1e-8 + 0j, mu2=1e-8j)
        pnd = joint_pnd(p, 9)
        with pytest.raises(InsufficientCountsError):
            wavepacket_g2(pnd, 9, 9)

    def test_out_of_range(self):
        p = TwoPointParams(n1=0.5, n2=0.5, g=0.0, mu1=0.1 + 0j, mu2=0.1 + 0j)
        pnd = joint_pnd(p, 4)
        with pytest.raises(DomainError):
            wavepacket_g2(pnd, pnd.n_max + 1, 0)


class TestClassicalG2:
    def test_thermal_coincident(self):
        p = TwoPointParams(n1=1.1, n2=1.1, g=1.0, mu1=0j, mu2=0j)
        pnd = joint_pnd(p, 12, tail_tol=1e-9)
        assert classical_g2(pnd) == pytest.approx(2.0, abs=2e-4)
        assert classical_g2_closed(p) == pytest.approx(2.0, rel=1e-14)

    def test_coherent_limit(self):
        p = TwoPointParams(n1=1e-9, n2=1e-9, g=1.0, mu1=1.0 + 0j, mu2=1.0 + 0j)
        assert classical_g2_closed(p) == pytest.approx(1.0, abs=1e-8)
        pnd = joint_pnd(p, 8)
        assert classical_g2(pnd) == pytest.approx(1.0, abs=1e-5)

    def test_operating_point_fraction(self):
        # thermal fraction solving 1 + 2f - f^2 = 1.7
        f = 1.0 - math.sqrt(0.3)
        assert f == pytest.approx(0.45228, abs=5e-6)
        mu2 = 1.0
        nbar = f * mu2 / (1 - f)
        p = TwoPointParams(n1=nbar, n2=nbar, g=1.0, mu1=1.0 + 0j, mu2=1.0 + 0j)
        assert classical_g2_closed(p) == pytest.approx(1.7, abs=1e-12)
        pnd = joint_pnd(p, 16, tail_tol=1e-9)
        assert classical_g2(pnd) == pytest.approx(1.7, abs=1e-3)

    @pytest.mark.parametrize("g", [0.0, 0.5, 0.9])
    def test_two_paths_agree(self, g):
        p = TwoPointParams(n1=0.8, n2=0.5, g=g, mu1=0.9 + 0j, mu2=0.6 + 0j)
        pnd = joint_pnd(p, 8, tail_tol=1e-10)
        assert classical_g2(pnd) == pytest.approx(classical_g2_closed(p), abs=1e-6)


class TestVacuumIdentity:
    def test_small_orders(self):
        assert vacuum_identity_check(0)
        assert vacuum_identity_check(1)
        assert vacuum_identity_check(16)

    def test_full_range(self):
        assert vacuum_identity_check(64)

    def test_bound(self):
        with pytest.raises(DomainError):
            vacuum_identity_check(65)
