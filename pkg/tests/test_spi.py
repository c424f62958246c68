import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from snodri.errors import AllZero, DegenerateFit, InsufficientData
from snodri.spi import (
    GammaMixedFit,
    accumulate,
    compute_spi,
    fit_gamma_mixed,
    normal_quantile,
    spi_from_fit,
)
from snodri.timeseries import MonthlySeries, MonthStamp


def precip_series(values, start=MonthStamp(1950, 1)):
    return MonthlySeries("APCP", "mm", start, np.asarray(values, dtype=float))


def gamma_record(n=600, seed=0):
    return np.random.default_rng(seed).gamma(2.0, 30.0, size=n)


class TestNormalQuantile:
    def test_against_library_quantile(self):
        p = np.concatenate([np.linspace(1e-12, 1e-6, 50), np.linspace(1e-6, 1 - 1e-6, 5001),
                            1 - np.linspace(1e-12, 1e-6, 50)])
        np.testing.assert_allclose(normal_quantile(p), oracles.normal_quantile(p), rtol=1e-9, atol=1e-9)

    def test_known_values(self):
        assert normal_quantile(0.5) == 0.0
        assert normal_quantile(0.2) == pytest.approx(-0.8416212335729143, abs=1e-12)
        assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_antisymmetric(self):
        p = np.linspace(0.001, 0.499, 200)
        np.testing.assert_allclose(normal_quantile(p), -normal_quantile(1 - p), atol=1e-12)

    def test_endpoints_and_domain(self):
        assert normal_quantile(0.0) == -np.inf and normal_quantile(1.0) == np.inf
        with pytest.raises(ValueError):
            normal_quantile(1.5)


class TestAccumulate:
    def test_identity(self):
        s = precip_series([1, 2, 3])
        np.testing.assert_array_equal(accumulate(s, 1).values, [1, 2, 3])

    def test_three_month_sums(self):
        out = accumulate(precip_series([1, 2, 3, 4]), 3).values
        assert np.isnan(out[:2]).all() and out[2:].tolist() == [6.0, 9.0]

    def test_too_long(self):
        with pytest.raises(InsufficientData):
            accumulate(precip_series(np.ones(12)), 13)


class TestFit:
    def test_monte_carlo_recovery(self):
        x = np.random.default_rng(42).gamma(2.0, 3.0, size=10_000)
        fit = fit_gamma_mixed(x)
        assert fit.q0 == 0.0 and fit.converged
        assert abs(fit.shape - 2.0) < 0.2 and abs(fit.scale - 3.0) < 0.3

    def test_matches_library_mle(self):
        x = np.random.default_rng(7).gamma(0.8, 12.0, size=400)
        fit = fit_gamma_mixed(x)
        a, scale = oracles.gamma_mle(x)
        assert fit.shape == pytest.approx(a, rel=1e-5)
        assert fit.scale == pytest.approx(scale, rel=1e-5)

    def test_zero_fraction_counted(self):
        x = np.r_[np.zeros(40), np.random.default_rng(1).gamma(2.0, 5.0, 60)]
        assert fit_gamma_mixed(x).q0 == 0.4

    def test_all_zero(self):
        with pytest.raises(AllZero):
            fit_gamma_mixed(np.zeros(20))

    def test_identical_positives(self):
        with pytest.raises(DegenerateFit):
            fit_gamma_mixed(np.full(20, 3.0))

    def test_cdf_zero_mass_convention(self):
        fit = GammaMixedFit(q0=0.4, shape=2.0, scale=1.0, n_samples=100)
        assert float(fit.cdf(0.0)) == 0.2
        assert float(spi_from_fit(0.0, fit)) == pytest.approx(-0.8416212335729143, abs=1e-9)


class TestComputeSpi:
    def test_median_maps_to_zero(self):
        rec = gamma_record()
        spi = compute_spi(precip_series(rec), 1)
        fit = spi.fits[3]
        z = spi_from_fit(fit.median(), fit)
        assert abs(float(z)) < 0.1

    def test_zero_month_with_known_q0(self):
        rec = gamma_record(600, 3)
        jan = np.arange(0, 600, 12)
        rec[jan[:20]] = 0.0  # 20 of 50 Januaries dry, q0 = 0.4
        spi = compute_spi(precip_series(rec), 1)
        assert spi.fits[1].q0 == pytest.approx(0.4)
        assert spi.values[jan[0]] == pytest.approx(-0.8416212335729143, abs=1e-9)

    def test_calibration(self):
        spi = compute_spi(precip_series(gamma_record(1000, 11)), 3)
        v = spi.values[np.isfinite(spi.values)]
        assert abs(v.mean()) < 0.05 and 0.9 <= v.std() <= 1.1

    def test_no_infinities(self):
        rec = gamma_record(360, 5)
        rec[300] = 1e6
        spi = compute_spi(precip_series(rec), 1, fit_window=(None, MonthStamp(1950, 1) + 239))
        assert np.all(np.isfinite(spi.values))
        assert spi.values.max() == pytest.approx(float(normal_quantile(1 - 1e-6)))

    def test_fit_window_restricts_fitting(self):
        rec = gamma_record(480, 9)
        window = (None, MonthStamp(1950, 1) + 359)
        a = compute_spi(precip_series(rec), 3, fit_window=window)
        poisoned = rec.copy()
        poisoned[360:] *= 50.0
        b = compute_spi(precip_series(poisoned), 3, fit_window=window)
        assert a.fits == b.fits
        np.testing.assert_array_equal(a.values[:360], b.values[:360])

    def test_too_few_years(self):
        with pytest.raises(InsufficientData):
            compute_spi(precip_series(gamma_record(96)), 1)

    def test_leading_nans(self):
        spi = compute_spi(precip_series(gamma_record()), 6)
        assert np.isnan(spi.values[:5]).all() and np.isfinite(spi.values[5:]).all()
        assert spi.variable_id == "SPI6"

    @settings(max_examples=15, deadline=None)
    @given(st.floats(0.01, 100.0))
    def test_scale_equivariance(self, c):
        rec = gamma_record(360, 2)
        a = compute_spi(precip_series(rec), 3).values
        b = compute_spi(precip_series(rec * c), 3).values
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_monotone_within_month(self):
        spi = compute_spi(precip_series(gamma_record()), 1)
        grid = np.linspace(0.0, 400.0, 2001)
        z = spi_from_fit(grid, spi.fits[7])
        assert np.all(np.diff(z) >= 0)
