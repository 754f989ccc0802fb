import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectralens.datamatrix import DataMatrix, preprocess
from spectralens.spectra import (
    DensityHistogram,
    InsufficientSpectrumError,
    Spectrum,
    detect_bulk,
    eigenvalues,
    fit_power_law,
    gram,
    histogram,
    kl_divergence,
    spectral_entropy,
)
from spectralens.synth import PopulationCovariance, RngSeed, sample_gaussian

# Frozen oracle: random symmetric 8x8 from Philox key 1234, sym = (a + a.T)/2;
# eigenvalues recomputed independently via Faddeev-LeVerrier characteristic
# polynomial coefficients and polynomial root finding.
EIG_ORACLE_KEY = 1234
EIG_ORACLE_ROOTS = np.array(
    [
        4.266884669074,
        3.522899780921,
        0.666032034893,
        -0.193820080899,
        -0.321063880886,
        -1.824351493377,
        -2.078207369033,
        -3.646282053106,
    ]
)


class TestGram:
    def test_identity_columns(self):
        x = DataMatrix(np.eye(3), centered=True)
        g = gram(x)
        assert np.allclose(g.matrix, np.eye(3) / 3.0)

    def test_single_column_rank_one(self):
        v = np.array([[1.0], [2.0], [3.0]])
        g = gram(DataMatrix(v, centered=True))
        assert np.allclose(g.matrix, v @ v.T)
        assert g.M == 1

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        g = gram(DataMatrix(rng.standard_normal((20, 100)), centered=True))
        assert np.array_equal(g.matrix, g.matrix.T)

    def test_ugd_close_to_identity(self):
        cov = PopulationCovariance.identity(100)
        x = preprocess(sample_gaussian(cov, 1_000_000, RngSeed(0)))
        g = gram(x)
        assert np.linalg.norm(g.matrix - np.eye(100), 2) < 0.05

    def test_warns_uncentered(self):
        rng = np.random.default_rng(1)
        with pytest.warns(UserWarning):
            gram(DataMatrix(rng.standard_normal((5, 10)) + 10.0))


class TestEigenvalues:
    def test_diagonal(self):
        spec = eigenvalues(np.diag([3.0, 1.0, 2.0]), M=3)
        assert np.allclose(spec.eigenvalues, [3.0, 2.0, 1.0])

    def test_rank_one(self):
        x = np.array([1.0, 2.0])  # norm^2 = 5
        spec = eigenvalues(np.outer(x, x), M=1)
        assert np.allclose(spec.eigenvalues, [5.0, 0.0], atol=1e-12)

    def test_char_poly_oracle(self):
        rng = np.random.Generator(np.random.Philox(key=EIG_ORACLE_KEY))
        a = rng.standard_normal((8, 8))
        sym = (a + a.T) / 2.0
        spec = eigenvalues(sym + 10 * np.eye(8), M=8)  # shift keeps it PSD
        assert np.allclose(spec.eigenvalues - 10.0, EIG_ORACLE_ROOTS, atol=1e-8)

    def test_residual_contract(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((30, 200))
        g = gram(DataMatrix(x - x.mean(axis=1, keepdims=True), centered=True))
        lam, v = np.linalg.eigh(g.matrix)
        resid = np.linalg.norm(g.matrix @ v - v * lam, axis=0)
        assert np.all(resid <= 1e-8 * np.linalg.norm(g.matrix, 2))

    def test_trace_preserved(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((40, 300))
        g = gram(DataMatrix(x - x.mean(axis=1, keepdims=True), centered=True))
        spec = eigenvalues(g)
        assert spec.eigenvalues.sum() == pytest.approx(
            np.trace(g.matrix), rel=1e-8
        )


class TestDetectBulk:
    def test_pure_power_law_runs_to_end(self):
        lam = np.arange(1, 1001, dtype=np.float64) ** -1.5
        spec = Spectrum(lam, d=1000, M=1000)
        assert detect_bulk(spec).bulk_range[1] == 1000

    def test_synthetic_cliff(self):
        lam = np.arange(1, 1001, dtype=np.float64) ** -1.5
        lam[500:] = 1e-20
        spec = Spectrum(lam, d=1000, M=1000)
        d_bulk = detect_bulk(spec).bulk_range[1]
        assert abs(d_bulk - 500) <= 25

    def test_too_few_levels(self):
        lam = np.arange(1, 41, dtype=np.float64) ** -1.0
        with pytest.raises(InsufficientSpectrumError):
            detect_bulk(Spectrum(lam, d=40, M=40))


class TestFitPowerLaw:
    def test_exact_recovery(self):
        i = np.arange(1, 501, dtype=np.float64)
        spec = Spectrum(7.0 * i**-1.25, d=500, M=500).with_bulk(1, 500)
        fit = fit_power_law(spec)
        assert fit.alpha == pytest.approx(0.25, abs=1e-10)
        assert fit.amplitude == pytest.approx(7.0, rel=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-10)

    def test_span_too_small(self):
        i = np.arange(1, 101, dtype=np.float64)
        spec = Spectrum(i**-1.0, d=100, M=100).with_bulk(10, 30)
        with pytest.raises(ValueError):
            fit_power_law(spec)


class TestSpectralEntropy:
    def test_uniform_is_log_n(self):
        spec = Spectrum(np.ones(200), d=200, M=200).with_bulk(1, 100)
        assert spectral_entropy(spec) == pytest.approx(np.log(100), abs=1e-12)

    def test_bounded_by_log_n(self):
        rng = np.random.default_rng(6)
        lam = np.sort(rng.uniform(0.1, 5.0, 150))[::-1]
        spec = Spectrum(lam, d=150, M=150).with_bulk(1, 150)
        assert spectral_entropy(spec) <= np.log(150)


class TestHistogram:
    def test_two_values_two_bins(self):
        spec = Spectrum(np.array([3.0, 1.0]), d=2, M=2).with_bulk(1, 2)
        h = histogram(spec, bins=2, normalization="raw")
        assert np.allclose(h.masses, [0.5, 0.5])

    def test_masses_sum_to_one(self):
        rng = np.random.default_rng(7)
        lam = np.sort(rng.uniform(0.1, 2.0, 300))[::-1]
        spec = Spectrum(lam, d=300, M=300).with_bulk(1, 300)
        h = histogram(spec, bins=64)
        assert h.masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            DensityHistogram(np.array([0.0, 1.0, 2.0]), np.array([1.5, -0.5]))


class TestKlDivergence:
    def _hist(self, masses):
        masses = np.asarray(masses, dtype=np.float64)
        edges = np.linspace(0.0, 1.0, masses.size + 1)
        return DensityHistogram(edges, masses / masses.sum())

    def test_self_distance_zero(self):
        p = self._hist([0.2, 0.3, 0.5])
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-9)

    def test_closed_form(self):
        p = self._hist([1.0, 0.0])
        q = self._hist([0.5, 0.5])
        assert kl_divergence(p, q) == pytest.approx(np.log(2), abs=1e-6)

    def test_mismatched_edges(self):
        p = self._hist([0.5, 0.5])
        q = DensityHistogram(np.array([0.0, 2.0, 4.0]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            kl_divergence(p, q)

    @given(
        st.lists(st.floats(1e-6, 1.0), min_size=4, max_size=4),
        st.lists(st.floats(1e-6, 1.0), min_size=4, max_size=4),
    )
    @settings(max_examples=1000, deadline=None)
    def test_nonnegative(self, pm, qm):
        assert kl_divergence(self._hist(pm), self._hist(qm)) >= -1e-12
