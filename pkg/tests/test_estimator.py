"""Deconvolution estimator: f_m recovery, level/threshold rules, block
thresholding, and the Monte Carlo moment properties of the coefficients."""

import math

import numpy as np
import pytest

from conftest import boxcar_linear_design
from lrdeconv.channels import (
    BlurKernel,
    ChannelDesign,
    delta_kappa,
    epsilon_n,
    simulate_observations,
)
from lrdeconv.errors import ConfigError
from lrdeconv.estimator import (
    EstimatorConfig,
    block_partition,
    block_threshold,
    calibrate_mu,
    choose_levels,
    empirical_mu_constants,
    estimate,
    fourier_deconvolve,
    mu_lower_bound,
    threshold_value,
)
from lrdeconv.fourier import FourierSeries, coeffs_to_grid
from lrdeconv.meyer import MeyerSpec, WaveletCoefficients, analyze
from lrdeconv.noise import NoiseModel
from lrdeconv.riskbench import make_test_function


def noiseless_design(u_values, N=256):
    u = tuple(u_values)
    return ChannelDesign(u, (0.0,) * len(u), N,
                         tuple(NoiseModel.white(1e-300) for _ in u))


class TestFourierDeconvolve:
    def test_single_flat_channel_exact(self):
        design = noiseless_design([0.0], N=128)  # heat at u = 0: g == 1
        f = make_test_function("sawtooth_smoothed", 30, {"m0": 4.0, "decay": 1.0})
        y = simulate_observations(f, design, BlurKernel("heat"), seed=1)
        f_hat, ill = fourier_deconvolve(y, design, BlurKernel("heat"))
        assert not ill
        assert f_hat.get(f.m) == pytest.approx(f.values, abs=1e-12)

    def test_multichannel_zero_noise(self):
        design = noiseless_design([0.21, 0.33, 0.47], N=256)
        f = make_test_function("bump_mix", 40, {})
        y = simulate_observations(f, design, BlurKernel("boxcar"), seed=2)
        f_hat, _ = fourier_deconvolve(y, design, BlurKernel("boxcar"))
        well_posed = [m for m in f.m if m not in set(_resonant(design, f.band))]
        got = f_hat.get(np.array(well_posed))
        expect = f.get(np.array(well_posed))
        assert got == pytest.approx(expect, abs=1e-9)

    def test_boxcar_divisible_frequencies_zero_filled(self):
        M, N = 8, 128
        design = noiseless_design([l / M for l in range(1, M + 1)], N=N)
        f = make_test_function("smooth_sine", M, {"freq": M})
        y = simulate_observations(f, design, BlurKernel("boxcar"), seed=3)
        f_hat, ill = fourier_deconvolve(y, design, BlurKernel("boxcar"))
        # brute force: every channel is blind at multiples of M/2
        g = np.sin(2 * np.pi * M * np.arange(1, M + 1) / M)
        assert np.abs(g).max() < 1e-12
        assert M in ill and -M in ill
        assert f_hat.get(M) == 0.0

    def test_shape_mismatch(self):
        design = noiseless_design([0.3], N=64)
        with pytest.raises(ConfigError):
            fourier_deconvolve(np.zeros((2, 64)), design, BlurKernel("boxcar"))


def _resonant(design, band):
    out = []
    for m in range(-band, band + 1):
        g = np.abs(np.sin(2 * np.pi * m * design.u_array()))
        if m != 0 and g.max() < 1e-12:
            out.append(m)
    return out


class TestChooseLevels:
    def test_regular_examples(self):
        j0, J, _ = choose_levels(2.0 ** 30, EstimatorConfig(nu=1.0))
        assert J == 10
        j0, J, _ = choose_levels(2.0 ** 30, EstimatorConfig(nu=2.0))
        assert J == 6

    def test_regular_j0(self):
        n_star = math.exp(8.0)  # ln n* = 8 -> j0 = 3
        j0, _, _ = choose_levels(n_star, EstimatorConfig(nu=0.5))
        assert j0 == 3

    def test_supersmooth_degenerate(self):
        cfg = EstimatorConfig(alpha1=1.0, beta=2.0)
        j0, J, warns = choose_levels(math.exp(32.0), cfg)
        assert (j0, J) == (0, 0)
        assert any("clamped" in w for w in warns)

    def test_nyquist_clamp(self):
        j0, J, warns = choose_levels(2.0 ** 40, EstimatorConfig(nu=0.5), N=64)
        assert J <= int(math.log2(64)) - 1

    def test_too_small(self):
        with pytest.raises(ConfigError):
            choose_levels(2.0, EstimatorConfig())


class TestThresholdValue:
    def test_flat_case(self):
        cfg = EstimatorConfig(mu=1.0, nu=0.0, lambda1=0.0)
        n_star = 1000.0
        for j in (0, 3, 7):
            assert threshold_value(j, n_star, 10_000, cfg) == pytest.approx(
                math.log(n_star) / n_star
            )

    def test_monotone_in_level(self):
        cfg = EstimatorConfig(mu=1.0, nu=1.5)
        vals = [threshold_value(j, 500.0, 1000, cfg) for j in range(6)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_mu_squared_scaling(self):
        lo = threshold_value(3, 500.0, 1000, EstimatorConfig(mu=1.0, nu=2.0))
        hi = threshold_value(3, 500.0, 1000, EstimatorConfig(mu=2.0, nu=2.0))
        assert hi == pytest.approx(4 * lo)

    def test_supersmooth_rejected(self):
        with pytest.raises(ConfigError):
            threshold_value(3, 500.0, 1000, EstimatorConfig(alpha1=1.0, beta=2.0))


class TestBlockPartition:
    def test_exact_blocks(self):
        part = block_partition(5, int(math.exp(8)))  # ceil(ln n) = 8
        assert part.block_len == 8
        assert part.blocks == ((0, 8), (8, 16), (16, 24), (24, 32))

    def test_remainder_block(self):
        part = block_partition(5, int(math.exp(9.5)))  # ceil(ln n) = 10
        assert [b - a for a, b in part.blocks] == [10, 10, 10, 2]

    @pytest.mark.parametrize("j", range(0, 11))
    def test_cover_and_disjoint(self, j):
        part = block_partition(j, 4096)
        covered = []
        for start, stop in part.blocks:
            covered.extend(range(start, stop))
        assert covered == list(range(2 ** j))

    def test_single_block(self):
        part = block_partition(2, 4096)  # 2^j = 4 <= ceil(ln n) = 9
        assert part.blocks == ((0, 4),)


class TestBlockThreshold:
    def make_coeffs(self, rng):
        coeffs = WaveletCoefficients.zeros(3, 6)
        coeffs.scaling[:] = rng.normal(size=8)
        for j in range(3, 6):
            coeffs.detail[j][:] = rng.normal(size=2 ** j)
        return coeffs

    def test_mu_zero_keeps_everything(self, rng):
        coeffs = self.make_coeffs(rng)
        out, decisions = block_threshold(coeffs, 4096, 1000.0,
                                         EstimatorConfig(mu=0.0, nu=2.0))
        assert all(d.kept for d in decisions)
        for j in range(3, 6):
            assert np.array_equal(out.detail[j], coeffs.detail[j])

    def test_zero_coefficients_kill_all(self):
        coeffs = WaveletCoefficients.zeros(3, 6)
        out, decisions = block_threshold(coeffs, 4096, 1000.0,
                                         EstimatorConfig(mu=1.0, nu=2.0))
        assert not any(d.kept for d in decisions)
        assert out.energy() == 0.0

    def test_single_energetic_block_survives(self):
        n, n_star = 4096, 1000.0
        cfg = EstimatorConfig(mu=1.0, nu=1.0)
        coeffs = WaveletCoefficients.zeros(3, 5)
        part = block_partition(4, n)
        lam = threshold_value(4, n_star, n, cfg)
        start, stop = part.blocks[1]
        coeffs.detail[4][start:stop] = math.sqrt(2 * lam / (stop - start))
        out, decisions = block_threshold(coeffs, n, n_star, cfg)
        kept = [(d.level, d.block) for d in decisions if d.kept]
        assert kept == [(4, 2)]
        assert np.all(out.detail[3] == 0.0)

    def test_kept_iff_energy_reaches_threshold(self, rng):
        coeffs = self.make_coeffs(rng)
        _, decisions = block_threshold(coeffs, 4096, 50.0, EstimatorConfig(mu=0.7, nu=1.0))
        for d in decisions:
            assert d.kept == (d.energy >= d.threshold)

    def test_monotone_in_mu(self, rng):
        coeffs = self.make_coeffs(rng)
        kept_sets = []
        for mu in (0.1, 0.5, 1.0, 2.0):
            _, decisions = block_threshold(coeffs, 4096, 200.0,
                                           EstimatorConfig(mu=mu, nu=1.0))
            kept_sets.append({(d.level, d.block) for d in decisions if d.kept})
        for small, large in zip(kept_sets[1:], kept_sets[:-1]):
            assert small <= large


class TestEstimatePipeline:
    def test_noiseless_band_limited_exact(self):
        design = noiseless_design([0.21, 0.37], N=256)
        f = make_test_function("sawtooth_smoothed", 40, {"m0": 4.0, "decay": 1.5})
        y = simulate_observations(f, design, BlurKernel("boxcar"), seed=4)
        cfg = EstimatorConfig(mu=0.0, nu=2.0, level_override=(3, 7))
        result = estimate(y, design, BlurKernel("boxcar"), cfg)
        truth = coeffs_to_grid(f, design.N).real
        rel = np.sum((result.grid - truth) ** 2) / np.sum(truth ** 2)
        assert rel <= 1e-12

    def test_deterministic(self):
        design = boxcar_linear_design(2 ** 12)
        f = make_test_function("smooth_sine", 3, {"freq": 3})
        y = simulate_observations(f, design, BlurKernel("boxcar"), seed=5)
        cfg = EstimatorConfig(mu=1.0, nu=2.0)
        a = estimate(y, design, BlurKernel("boxcar"), cfg)
        b = estimate(y, design, BlurKernel("boxcar"), cfg)
        assert np.array_equal(a.grid, b.grid)

    def test_linear_in_y_when_mu_zero(self, rng):
        design = boxcar_linear_design(2 ** 12)
        kernel = BlurKernel("boxcar")
        cfg = EstimatorConfig(mu=0.0, nu=2.0, level_override=(2, 4))
        y1 = rng.normal(size=(design.M, design.N))
        y2 = rng.normal(size=(design.M, design.N))
        g1 = estimate(y1, design, kernel, cfg).grid
        g2 = estimate(y2, design, kernel, cfg).grid
        g12 = estimate(2.0 * y1 - 0.5 * y2, design, kernel, cfg).grid
        assert g12 == pytest.approx(2.0 * g1 - 0.5 * g2, abs=1e-10)

    def test_threshold_monotonicity_via_estimate(self):
        design = boxcar_linear_design(2 ** 14)
        f = make_test_function("sawtooth_smoothed", 30, {"m0": 4.0, "decay": 1.5})
        y = simulate_observations(f, design, BlurKernel("boxcar"), seed=6)
        kept = []
        for mu in (0.3, 1.0, 3.0):
            cfg = EstimatorConfig(mu=mu, nu=2.0, level_override=(2, 5))
            result = estimate(y, design, BlurKernel("boxcar"), cfg)
            kept.append({(d.level, d.block) for d in result.decisions if d.kept})
        assert kept[2] <= kept[1] <= kept[0]

    def test_pure_noise_keeps_few_blocks(self):
        design = boxcar_linear_design(2 ** 12)
        kernel = BlurKernel("boxcar")
        levels = (2, 5)
        cfg0 = EstimatorConfig(mu=1.0, nu=2.0, level_override=levels)
        h1, c1, k3 = empirical_mu_constants(design, kernel, range(*levels), cfg0)
        mu = mu_lower_bound(h1, c1, k3, kappa=1.0, lambda1=0.0, nu=2.0)
        cfg = EstimatorConfig(mu=mu, nu=2.0, level_override=levels)
        f0 = FourierSeries.zeros(1)
        kept = total = 0
        for rep in range(200):
            y = simulate_observations(f0, design, kernel,
                                      np.random.SeedSequence(31, spawn_key=(rep,)))
            result = estimate(y, design, kernel, cfg)
            kept += sum(d.kept for d in result.decisions)
            total += len(result.decisions)
        assert kept / total <= 0.05

    def test_supersmooth_is_linear(self):
        design = ChannelDesign(
            tuple(2.5e-4 + l / 64 for l in range(1, 65)),
            (0.0,) * 64, 128, (NoiseModel.white(),) * 64,
        )
        f = make_test_function("smooth_sine", 1, {"freq": 1, "mean": 1.0})
        y = simulate_observations(f, design, BlurKernel("heat"), seed=8)
        cfg = EstimatorConfig(mu=1.0, alpha1=0.02, beta=2.0)
        result = estimate(y, design, BlurKernel("heat"), cfg)
        assert result.decisions == []
        assert result.diagnostics.j0 == result.diagnostics.J


@pytest.fixture(scope="module")
def null_coefficients():
    # f = 0 replicates of b_hat at levels [3, 6) for the linear-d design
    design = boxcar_linear_design(2 ** 14)
    kernel = BlurKernel("boxcar")
    spec = MeyerSpec(3, 6)
    reps = 500
    rows = {j: [] for j in range(3, 6)}
    f0 = FourierSeries.zeros(1)
    for rep in range(reps):
        y = simulate_observations(f0, design, kernel,
                                  np.random.SeedSequence(77, spawn_key=(rep,)))
        f_hat, _ = fourier_deconvolve(y, design, kernel)
        coeffs = analyze(f_hat, spec)
        for j in rows:
            rows[j].append(coeffs.detail[j].real)
    return design, kernel, {j: np.asarray(v) for j, v in rows.items()}


class TestCoefficientMoments:
    def test_variance_bound_stable_across_levels(self, null_coefficients):
        design, kernel, rows = null_coefficients
        ratios = []
        for j, B in rows.items():
            bound = delta_kappa(design, kernel, j, 1) / design.n
            ratios.append(B.var(axis=0, ddof=1).mean() / bound)
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert max(ratios) / min(ratios) < 5.0

    def test_fourth_moment_gaussian(self, null_coefficients):
        _, _, rows = null_coefficients
        for B in rows.values():
            m2 = (B ** 2).mean(axis=0)
            m4 = (B ** 4).mean(axis=0)
            assert np.mean(m4 / m2 ** 2) <= 3.5

    def test_deviation_bound(self, null_coefficients):
        # null-block energy exceeds lambda_j / 4 with small probability once
        # mu respects the conservative lower bound
        design, kernel, rows = null_coefficients
        cfg0 = EstimatorConfig(mu=1.0, nu=2.0, level_override=(3, 6))
        h1, c1, k3 = empirical_mu_constants(design, kernel, range(3, 6), cfg0)
        mu = mu_lower_bound(h1, c1, k3, kappa=1.0, lambda1=0.0, nu=2.0)
        cfg = EstimatorConfig(mu=mu, nu=2.0)
        _, n_star = epsilon_n(design)
        exceed = total = 0
        for j, B in rows.items():
            lam = threshold_value(j, n_star, design.n, cfg)
            part = block_partition(j, design.n)
            for start, stop in part.blocks:
                energies = np.sum(B[:, start:stop] ** 2, axis=1)
                exceed += int(np.sum(energies >= lam / 4))
                total += len(energies)
        assert exceed / total < 0.01


class TestMuCalibration:
    def test_lower_bound_formula(self):
        # mu = sqrt(2/(1-h1)) [sqrt(c1) + sqrt(8 pi kappa / k3) (ln 2)^(l/2) (2pi/3)^nu]
        got = mu_lower_bound(0.5, 4.0, 1.0, kappa=2.0, lambda1=0.0, nu=0.0)
        expect = math.sqrt(4.0) * (2.0 + math.sqrt(16 * math.pi))
        assert got == pytest.approx(expect, rel=1e-12)
        with pytest.raises(ConfigError):
            mu_lower_bound(1.5, 1.0, 1.0, 1.0, 0.0, 1.0)

    def test_calibrated_mu_controls_false_keeps(self):
        design = boxcar_linear_design(2 ** 12)
        kernel = BlurKernel("boxcar")
        cfg = EstimatorConfig(mu=1.0, nu=2.0, level_override=(2, 5))
        mu = calibrate_mu(design, kernel, cfg, reps=30, seed=13)
        assert mu in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0)
        # verify on fresh replicates
        cal = EstimatorConfig(mu=mu, nu=2.0, level_override=(2, 5))
        f0 = FourierSeries.zeros(1)
        kept = total = 0
        for rep in range(100):
            y = simulate_observations(f0, design, kernel,
                                      np.random.SeedSequence(14, spawn_key=(rep,)))
            result = estimate(y, design, kernel, cal)
            kept += sum(d.kept for d in result.decisions)
            total += len(result.decisions)
        assert kept / total <= 0.02
