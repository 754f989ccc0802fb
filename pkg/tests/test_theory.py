import math

import numpy as np
import pytest

from spectralens.synth import PopulationCovariance, RngSeed
from spectralens.theory import (
    SolverError,
    bulk_prediction,
    goe_wigner_sample,
    mp_density,
    mp_support,
    semicircle_density,
    solve_stieltjes,
)


class TestMpDensity:
    def test_support_edges(self):
        lo, hi = mp_support(1.0, 0.25)
        assert (lo, hi) == (0.25, 2.25)
        assert mp_density(np.array([0.2, 2.3]), 1.0, 0.25).tolist() == [0.0, 0.0]

    def test_unit_mass(self):
        lo, hi = mp_support(1.0, 0.5)
        lam = np.linspace(lo, hi, 2_000_001)
        assert np.trapezoid(mp_density(lam, 1.0, 0.5), lam) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_invalid_gamma(self):
        with pytest.raises(ValueError):
            mp_density(np.array([1.0]), 1.0, 1.5)


class TestBulkPrediction:
    def test_alpha_zero_at_i_equals_d(self):
        assert bulk_prediction(1000, 1000, 1.0, 0.0) == pytest.approx(1.0)

    def test_gamma_two(self):
        # c=2, alpha=1, i=d/2: 2 * Gamma(2) * 2^2 = 8
        assert bulk_prediction(500, 1000, 2.0, 1.0) == pytest.approx(8.0)

    def test_log_log_slope(self):
        i = np.arange(10, 501)
        vals = bulk_prediction(i, 1000, 1.0, 0.25)
        slope = np.polyfit(np.log(i), np.log(vals), 1)[0]
        assert slope == pytest.approx(-1.25, abs=1e-12)

    def test_requires_alpha_above_minus_one(self):
        with pytest.raises(ValueError):
            bulk_prediction(10, 100, 1.0, -1.5)


class TestSolveStieltjes:
    def test_identity_matches_mp(self):
        gamma, eps = 0.25, 1e-4
        cov = PopulationCovariance.identity(500)
        lo, hi = mp_support(1.0, gamma)
        grid = np.linspace(lo + 0.1, hi - 0.1, 300)
        sol = solve_stieltjes(gamma, cov, grid, eps=eps)
        dev = np.max(np.abs(sol.density - mp_density(grid, 1.0, gamma)))
        assert dev < 5 * eps

    def test_residual_contract(self):
        cov = PopulationCovariance.identity(100)
        grid = np.linspace(0.3, 2.2, 50)
        sol = solve_stieltjes(0.25, cov, grid, eps=1e-3)
        assert np.max(sol.residuals) < 1e-9

    def test_density_nonnegative(self):
        cov = PopulationCovariance.toeplitz(400, 1.0, 0.25)
        grid = np.geomspace(1e-3, float(cov.singular_values.max()) * 2, 300)
        sol = solve_stieltjes(0.4, cov, grid, eps=1e-3)
        assert np.all(sol.density >= 0)

    def test_toeplitz_unit_mass(self):
        cov = PopulationCovariance.toeplitz(1000, 1.14, 0.38)
        grid = np.geomspace(1e-4, float(cov.singular_values.max()) * 2, 600)
        sol = solve_stieltjes(0.38, cov, grid, eps=1e-4)
        assert abs(sol.mass - 1.0) < 0.02

    def test_alpha_to_minus_one_approaches_mp(self):
        # continuity: x^(-1-alpha) flattens to a point mass at c*Gamma(1+alpha)
        # as alpha -> -1, so the density approaches MP with that variance
        gamma = 0.3
        devs = []
        for alpha in (-0.9, -0.99):
            chat = math.gamma(1.0 + alpha)
            lo, hi = mp_support(chat, gamma)
            grid = np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 120)
            ref = mp_density(grid, chat, gamma)
            cov = PopulationCovariance.toeplitz(200, 1.0, alpha)
            sol = solve_stieltjes(gamma, cov, grid, eps=1e-3)
            devs.append(np.max(np.abs(sol.density - ref)) / np.max(ref))
        assert devs[1] < devs[0]

    def test_invalid_eps(self):
        cov = PopulationCovariance.identity(10)
        with pytest.raises(ValueError):
            solve_stieltjes(0.5, cov, np.linspace(0.5, 2, 10), eps=1.0)

    def test_invalid_gamma(self):
        cov = PopulationCovariance.identity(10)
        with pytest.raises(ValueError):
            solve_stieltjes(1.5, cov, np.linspace(0.5, 2, 10))


class TestGoeWignerSample:
    def test_all_real_and_sorted(self):
        spec = goe_wigner_sample(200, RngSeed(0))
        assert np.all(np.isreal(spec.eigenvalues))
        assert np.all(np.diff(spec.eigenvalues) <= 0)

    def test_semicircle_ks(self):
        spec = goe_wigner_sample(2000, RngSeed(1))
        lam = np.sort(spec.eigenvalues)
        # closed-form semicircle CDF on [-1, 1]
        x = np.clip(lam, -1.0, 1.0)
        cdf = 0.5 + (x * np.sqrt(1 - x**2) + np.arcsin(x)) / np.pi
        n = lam.size
        ks = max(
            np.max(np.arange(1, n + 1) / n - cdf),
            np.max(cdf - np.arange(n) / n),
        )
        assert ks < 0.03

    def test_determinism(self):
        a = goe_wigner_sample(50, RngSeed(2))
        b = goe_wigner_sample(50, RngSeed(2))
        assert np.array_equal(a.eigenvalues, b.eigenvalues)


class TestSemicircle:
    def test_unit_mass(self):
        x = np.linspace(-1, 1, 200001)
        assert np.trapezoid(semicircle_density(x), x) == pytest.approx(1.0, abs=1e-6)

    def test_zero_outside_support(self):
        assert semicircle_density(np.array([1.5, -1.5])).tolist() == [0.0, 0.0]
