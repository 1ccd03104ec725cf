"""Long-range dependent noise: spectral densities, autocovariances, exact
sampling, and Toeplitz eigenvalue scaling."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from lrdeconv.errors import ConfigError, NumericError, SizeLimitError
from lrdeconv.noise import (
    NoiseModel,
    autocovariance,
    sample_path,
    sample_paths,
    spectral_density,
    toeplitz_eigen_bounds,
)


class TestModelValidation:
    def test_d_range(self):
        with pytest.raises(ConfigError):
            NoiseModel.farima(0.5)
        with pytest.raises(ConfigError):
            NoiseModel.farima(-0.1)
        with pytest.raises(ConfigError):
            NoiseModel("white", d=0.2)

    def test_scale_positive(self):
        with pytest.raises(ConfigError):
            NoiseModel.white(0.0)

    def test_fgn_hurst_window(self):
        with pytest.raises(ConfigError):
            NoiseModel.fgn(hurst=0.45)
        assert NoiseModel.fgn(hurst=0.75).d == pytest.approx(0.25)


class TestSpectralDensity:
    def test_white_constant(self):
        assert spectral_density(NoiseModel.white(), 1.0) == pytest.approx(
            1.0 / (2 * math.pi), abs=1e-15
        )

    def test_farima_at_pi(self):
        # |2 (1 - cos pi)| = 4
        model = NoiseModel.farima(0.3, scale=1.5)
        expect = 1.5 ** 2 / (2 * math.pi) * 4.0 ** (-0.3)
        assert spectral_density(model, math.pi) == pytest.approx(expect, rel=1e-12)

    def test_fgn_low_frequency_power_law(self):
        # a(lam) -> (sigma^2 / 2 pi) Gamma(2H+1) sin(pi H) lam^(1-2H) as lam -> 0.
        # (This constant is the one consistent with the exact series: integrating
        # the density recovers gamma(0), and H = 1/2 recovers sigma^2 / 2 pi.)
        H = 0.75
        model = NoiseModel.fgn(hurst=H)
        c = math.gamma(2 * H + 1) * math.sin(math.pi * H) / (2 * math.pi)
        val = spectral_density(model, 0.01)
        assert val == pytest.approx(c * 0.01 ** (1 - 2 * H), rel=0.02)

    def test_fgn_half_is_white(self):
        model = NoiseModel.fgn(hurst=0.5)
        lam = np.array([0.3, 1.0, 3.0])
        assert spectral_density(model, lam) == pytest.approx(
            np.full(3, 1 / (2 * math.pi)), rel=1e-10
        )

    def test_pole_and_domain_errors(self):
        with pytest.raises(NumericError):
            spectral_density(NoiseModel.farima(0.2), 0.0)
        with pytest.raises(ConfigError):
            spectral_density(NoiseModel.white(), 4.0)

    def test_symmetry(self):
        lam = np.linspace(0.01, math.pi, 64)
        for model in (NoiseModel.farima(0.3), NoiseModel.fgn(hurst=0.8)):
            assert spectral_density(model, lam) == pytest.approx(
                spectral_density(model, -lam), rel=1e-13
            )

    @pytest.mark.parametrize("model", [
        NoiseModel.farima(0.1), NoiseModel.farima(0.4),
        NoiseModel.fgn(hurst=0.6), NoiseModel.fgn(hurst=0.9),
    ])
    def test_spectral_sandwich(self, model):
        # a(lam) |lam|^(2d) stays in a fixed positive band away from 0
        lam = np.concatenate([np.linspace(-math.pi, -0.01, 200),
                              np.linspace(0.01, math.pi, 200)])
        vals = spectral_density(model, lam) * np.abs(lam) ** (2 * model.d)
        assert np.all(np.isfinite(vals)) and np.all(vals > 0)
        assert vals.max() / vals.min() < 10.0


class TestAutocovariance:
    def test_white_like(self):
        assert autocovariance(NoiseModel.farima(0.0), 0) == pytest.approx(1.0)
        assert autocovariance(NoiseModel.farima(0.0), 1) == 0.0

    def test_fgn_half_uncorrelated(self):
        assert autocovariance(NoiseModel.fgn(hurst=0.5), 1) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("lag", [0, 1, 5])
    def test_farima_matches_quadrature(self, lag):
        # adaptive quadrature of the spectral density is the oracle
        model = NoiseModel.farima(0.3)
        val, err = quad(lambda lam: math.cos(lag * lam) * spectral_density(model, lam),
                        0.0, math.pi, points=[0.0], limit=200)
        assert autocovariance(model, lag) == pytest.approx(2 * val, abs=1e-6)

    @pytest.mark.parametrize("hurst", [0.6, 0.9])
    def test_fgn_matches_quadrature(self, hurst):
        model = NoiseModel.fgn(hurst=hurst)
        val, err = quad(lambda lam: spectral_density(model, lam),
                        1e-10, math.pi, limit=200)
        assert autocovariance(model, 0) == pytest.approx(2 * val, abs=1e-6)

    def test_symmetry(self):
        model = NoiseModel.fgn(hurst=0.8)
        lags = np.arange(-6, 7)
        vals = autocovariance(model, lags)
        assert vals == pytest.approx(vals[::-1], rel=1e-14)


class TestSamplePath:
    def test_white_sample_mean(self):
        x = sample_path(NoiseModel.white(), 4096, seed=5)
        assert abs(x.mean()) < 4 / math.sqrt(4096)

    def test_deterministic(self):
        model = NoiseModel.farima(0.3)
        a = sample_path(model, 1024, seed=17)
        b = sample_path(model, 1024, seed=17)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_path(model, 1024, seed=18))

    def test_lag1_autocovariance(self):
        # pooled lag-1 sample autocovariance over 200 replicates vs gamma(1)
        model = NoiseModel.farima(0.3)
        n, reps = 4096, 200
        acc = np.empty(reps)
        for rep in range(reps):
            x = sample_path(model, n, seed=np.random.SeedSequence(123, spawn_key=(rep,)))
            acc[rep] = np.mean(x[1:] * x[:-1])
        target = float(autocovariance(model, 1))
        se = acc.std(ddof=1) / math.sqrt(reps)
        assert abs(acc.mean() - target) < 3 * se

    def test_empirical_covariance_matrix(self):
        # 2000 replicates of length 128: entrywise within 4 SE of gamma(j-k)
        for model in (NoiseModel.farima(0.25), NoiseModel.fgn(hurst=0.75)):
            n, reps = 128, 2000
            rows = np.empty((reps, n))
            for rep in range(reps):
                rows[rep] = sample_path(model, n,
                                        seed=np.random.SeedSequence(7, spawn_key=(rep,)))
            prods = rows[:, :, None] * rows[:, None, :]
            mean = prods.mean(axis=0)
            se = prods.std(axis=0, ddof=1) / math.sqrt(reps)
            gamma = autocovariance(model, np.abs(np.subtract.outer(np.arange(n),
                                                                   np.arange(n))))
            assert np.all(np.abs(mean - gamma) < 4 * se + 1e-12)

    def test_batch_rows_match_serial(self):
        models = [NoiseModel.farima(0.1), NoiseModel.farima(0.3), NoiseModel.white()]
        batch = sample_paths(models, 512, master_seed=42)
        for i, model in enumerate(models):
            row = sample_path(model, 512, seed=np.random.SeedSequence(42, spawn_key=(i,)))
            assert np.array_equal(batch[i], row)

    def test_n_points_one(self):
        x = sample_path(NoiseModel.farima(0.4), 1, seed=0)
        assert x.shape == (1,)


class TestToeplitzEigenBounds:
    def test_white_identity(self):
        s = toeplitz_eigen_bounds(NoiseModel.white(1.5), 64)
        assert s.lambda_min == pytest.approx(1.5 ** 2, abs=1e-10)
        assert s.lambda_max == pytest.approx(1.5 ** 2, abs=1e-10)

    def test_positive_definite(self):
        for model in (NoiseModel.farima(0.4), NoiseModel.fgn(hurst=0.9)):
            for n in (64, 256, 1024):
                s = toeplitz_eigen_bounds(model, n)
                assert 0 < s.lambda_min <= s.lambda_max

    def test_ratio_band_is_stable(self):
        vals = [toeplitz_eigen_bounds(NoiseModel.farima(0.25), n).ratio_max
                for n in (64, 128, 256, 512)]
        assert max(vals) / min(vals) < 2.0

    def test_lambda_max_slope_fgn(self):
        model = NoiseModel.fgn(hurst=0.75)
        ns = [64, 128, 256, 512, 1024]
        lams = [toeplitz_eigen_bounds(model, n).lambda_max for n in ns]
        slope = np.polyfit(np.log(ns), np.log(lams), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.15)

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            toeplitz_eigen_bounds(NoiseModel.white(), 8192)
        with pytest.raises(ConfigError):
            toeplitz_eigen_bounds(NoiseModel.white(), 1)

    def test_cholesky_fallback_size_limit(self):
        from lrdeconv.noise import _cholesky_factor

        with pytest.raises(SizeLimitError):
            _cholesky_factor(NoiseModel.farima(0.3), 2 ** 14 + 1)
        # small sizes factor fine and reproduce the covariance
        L = _cholesky_factor(NoiseModel.farima(0.3), 8)
        gamma = autocovariance(NoiseModel.farima(0.3), np.abs(
            np.subtract.outer(np.arange(8), np.arange(8))))
        assert L @ L.T == pytest.approx(gamma, abs=1e-12)
