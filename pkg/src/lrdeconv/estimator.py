"""Adaptive block-thresholding wavelet estimator.

Pipeline: per-channel DFT -> weighted-ratio Fourier deconvolution

    fhat_m = [sum_l N^(-2 d_l) conj(g_m(u_l)) y_m(u_l)]
             / [sum_l N^(-2 d_l) |g_m(u_l)|^2]

-> Meyer analysis at data-driven levels -> keep-or-kill on blocks of
~ln n coefficients against level thresholds -> synthesis back to the grid.

Level and threshold rules (regular regime, alpha1 = 0):

    2^j0 = ln n*,  2^J = (n*)^(1 / (2 nu + 1)),
    lambda_j = mu^2 (n*)^-1 ln(n*) 2^(2 nu j) j^lambda1,

and in the super-smooth regime (alpha1 > 0) a linear estimator at
2^j0 = (3 / 8 pi) (ln n* / (2 alpha1))^(1/beta), J = j0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    BlurKernel,
    ChannelDesign,
    delta_kappa,
    epsilon_n,
    kernel_fourier,
    simulate_observations,
    tau_kappa,
)
from .errors import ConfigError, NumericError
from .fourier import FourierSeries, coeffs_to_grid
from .meyer import MeyerSpec, WaveletCoefficients, analyze, frequency_set, synthesize_series

__all__ = [
    "EstimatorConfig",
    "BlockPartition",
    "ThresholdDecision",
    "EstimateResult",
    "fourier_deconvolve",
    "choose_levels",
    "threshold_value",
    "block_partition",
    "block_threshold",
    "estimate",
    "mu_lower_bound",
    "calibrate_mu",
]


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator knobs: threshold constant mu, kernel decay (nu, lambda1) or
    super-smooth parameters (alpha1, beta), and numeric tolerances."""

    mu: float = 1.0
    nu: float = 1.0
    lambda1: float = 0.0
    alpha1: float = 0.0
    beta: float = 1.0
    denom_tol: float = 1e-12
    level_override: tuple | None = None
    h1: float | None = None
    aux_poly: str = "poly7"

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigError("mu must be >= 0")
        if not 0.0 < self.denom_tol <= 1e-3:
            raise ConfigError("denom_tol must lie in (0, 1e-3]")
        if self.alpha1 < 0:
            raise ConfigError("alpha1 must be >= 0")
        if self.alpha1 > 0 and self.beta <= 0:
            raise ConfigError("beta must be > 0 in the super-smooth regime")
        if self.level_override is not None:
            j0, J = self.level_override
            if not 0 <= j0 <= J:
                raise ConfigError("level_override must satisfy 0 <= j0 <= J")
        if self.h1 is not None and not 0.0 < self.h1 < 1.0:
            raise ConfigError("h1 must lie in (0, 1)")

    @property
    def supersmooth(self) -> bool:
        return self.alpha1 > 0


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous blocks of length ceil(ln n) covering 0..2^j-1."""

    level: int
    block_len: int
    blocks: tuple  # ((start, stop), ...)

    @property
    def r_indices(self) -> range:
        return range(1, len(self.blocks) + 1)


@dataclass(frozen=True)
class ThresholdDecision:
    level: int
    block: int
    energy: float
    threshold: float
    kept: bool


@dataclass
class EstimateDiagnostics:
    ill_posed: list = field(default_factory=list)
    kept_blocks: dict = field(default_factory=dict)
    total_blocks: dict = field(default_factory=dict)
    epsilon_n: float = 1.0
    n_star: float = 0.0
    j0: int = 0
    J: int = 0
    warnings: list = field(default_factory=list)


@dataclass
class EstimateResult:
    grid: np.ndarray
    coeffs: WaveletCoefficients
    decisions: list
    diagnostics: EstimateDiagnostics


def fourier_deconvolve(y: np.ndarray, design: ChannelDesign, kernel: BlurKernel,
                       denom_tol: float = 1e-12) -> tuple[FourierSeries, list]:
    """Weighted-ratio estimator of f_m over the alias-free band.

    Frequencies whose denominator falls below denom_tol times the largest
    denominator are zero-filled and reported (ill-posed policy).
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.M, design.N):
        raise ConfigError(f"y must be M x N = {design.M} x {design.N}, got {y.shape}")
    N = design.N
    band = N // 2 - 1
    m = np.arange(-band, band + 1)
    Y = np.fft.fft(y, axis=1) / N
    Ym = Y[:, np.mod(m, N)]
    g = kernel_fourier(kernel, design.u_array(), m)
    w = (float(N) ** (-2.0 * design.d_array()))[:, None]
    numer = np.sum(w * np.conj(g) * Ym, axis=0)
    denom = np.sum(w * np.abs(g) ** 2, axis=0)
    cutoff = denom_tol * denom.max()
    ok = denom >= cutoff
    values = np.zeros_like(numer)
    values[ok] = numer[ok] / denom[ok]
    ill_posed = [int(mm) for mm in m[~ok]]
    return FourierSeries(band, values), ill_posed


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def choose_levels(n_star: float, config: EstimatorConfig,
                  N: int | None = None) -> tuple[int, int, list]:
    """Coarsest/finest levels (j0, J) from n*; J is exclusive.

    Regular regime: j0 = round(log2 ln n*), J = floor(log2 (n*)^(1/(2 nu + 1))).
    Super-smooth: 2^j0 = (3/8 pi)(ln n* / (2 alpha1))^(1/beta) rounded to the
    nearest level and J = j0 (linear estimator only).  Levels are clamped so
    every needed frequency stays below the per-channel Nyquist band.
    """
    if not n_star > math.e:
        raise ConfigError(f"n_star must exceed e for a level choice, got {n_star}")
    warnings: list[str] = []
    log_ns = math.log(n_star)
    if config.supersmooth:
        target = 3.0 / (8.0 * math.pi) * (log_ns / (2.0 * config.alpha1)) ** (1.0 / config.beta)
        j0 = _round_half_up(math.log2(target))
        if j0 < 0:
            warnings.append(
                f"super-smooth level rule gives 2^j0 = {target:.4g} < 1; clamped to j0 = 0"
            )
            j0 = 0
        J = j0
    else:
        j0 = _round_half_up(math.log2(log_ns))
        J = int(math.floor(math.log2(n_star) / (2.0 * config.nu + 1.0) + 1e-12))
    if N is not None:
        j_cap = int(math.log2(N)) - 1
        if J > j_cap:
            warnings.append(f"J clamped from {J} to {j_cap} by the N = {N} frequency band")
            J = j_cap
    if j0 > J:
        warnings.append(f"j0 = {j0} exceeds J = {J}; clamped (estimator is linear)")
        j0 = J
    return j0, J, warnings


def threshold_value(j: int, n_star: float, n: int, config: EstimatorConfig) -> float:
    """lambda_j = mu^2 (n*)^-1 ln(n*) 2^(2 nu j) j^lambda1, with 0^lambda1 := 1."""
    if config.supersmooth:
        raise ConfigError("thresholds are undefined in the super-smooth regime")
    j_pow = 1.0 if j == 0 else float(j) ** config.lambda1
    return config.mu ** 2 / n_star * math.log(n_star) * 2.0 ** (2.0 * config.nu * j) * j_pow


def block_partition(j: int, n: int) -> BlockPartition:
    """Blocks of length ceil(ln n); the last block keeps the remainder."""
    if j < 0 or n < 3:
        raise ConfigError("need j >= 0 and n >= 3")
    size = 2 ** j
    length = int(math.ceil(math.log(n)))
    starts = range(0, size, length)
    return BlockPartition(j, length, tuple((s, min(s + length, size)) for s in starts))


def block_threshold(coeffs_hat: WaveletCoefficients, n: int, n_star: float,
                    config: EstimatorConfig) -> tuple[WaveletCoefficients, list]:
    """Keep a detail block iff its energy reaches the level threshold.

    Scaling coefficients pass through untouched; decisions are returned for
    audit (one per block, kept == energy >= threshold).
    """
    out = coeffs_hat.copy()
    decisions: list[ThresholdDecision] = []
    for j in range(coeffs_hat.j0, coeffs_hat.J):
        lam = threshold_value(j, n_star, n, config)
        part = block_partition(j, n)
        vec = out.detail[j]
        for r, (start, stop) in zip(part.r_indices, part.blocks):
            energy = float(np.sum(np.abs(vec[start:stop]) ** 2))
            kept = energy >= lam
            if not kept:
                vec[start:stop] = 0.0
            decisions.append(ThresholdDecision(j, r, energy, lam, kept))
    return out, decisions


def estimate(y: np.ndarray, design: ChannelDesign, kernel: BlurKernel,
             config: EstimatorConfig) -> EstimateResult:
    """Full pipeline: deconvolve, analyze, threshold (regular regime), synthesize."""
    eps, n_star = epsilon_n(design)
    diag = EstimateDiagnostics(epsilon_n=eps, n_star=n_star)
    if config.level_override is not None:
        j0, J = config.level_override
    else:
        j0, J, warns = choose_levels(n_star, config, N=design.N)
        diag.warnings.extend(warns)
    diag.j0, diag.J = j0, J

    f_hat, ill_posed = fourier_deconvolve(y, design, kernel, config.denom_tol)
    diag.ill_posed = ill_posed
    spec = MeyerSpec(j0, J, config.aux_poly)
    coeffs = analyze(f_hat, spec)

    if config.supersmooth or J == j0:
        thresholded, decisions = coeffs, []
    else:
        thresholded, decisions = block_threshold(coeffs, design.n, n_star, config)
        for j in range(j0, J):
            level = [d for d in decisions if d.level == j]
            diag.kept_blocks[j] = sum(d.kept for d in level)
            diag.total_blocks[j] = len(level)

    series = synthesize_series(thresholded, spec)
    grid = coeffs_to_grid(series, design.N).real
    return EstimateResult(grid, thresholded, decisions, diag)


def mu_lower_bound(h1: float, c1: float, k3: float, kappa: float,
                   lambda1: float, nu: float) -> float:
    """Conservative threshold constant:
    sqrt(2/(1-h1)) [sqrt(c1) + sqrt(8 pi kappa / k3) (ln 2)^(lambda1/2) (2 pi/3)^nu].
    """
    if not 0.0 < h1 < 1.0:
        raise ConfigError("h1 must lie in (0, 1)")
    if c1 < 0 or k3 <= 0:
        raise ConfigError("need c1 >= 0 and k3 > 0")
    tail = math.sqrt(8.0 * math.pi * kappa / k3) * math.log(2.0) ** (lambda1 / 2.0) \
        * (2.0 * math.pi / 3.0) ** nu
    return math.sqrt(2.0 / (1.0 - h1)) * (math.sqrt(c1) + tail)


def empirical_mu_constants(design: ChannelDesign, kernel: BlurKernel,
                           levels, config: EstimatorConfig) -> tuple[float, float, float]:
    """(h1, c1, k3) surrogates measured from the design functionals.

    h1 bounds -ln eps_n / ln n; c1 bounds Delta_1(j,n) eps_n / (2^(2 nu j) j^lambda1);
    k3 bounds tau_1(m,n) m^nu / eps_n from below over the used band.
    """
    eps, _ = epsilon_n(design)
    h1 = max(-math.log(eps) / math.log(design.n), 1e-6) if eps < 1.0 else 1e-6
    h1 = min(h1, 0.999)
    c1 = 0.0
    k3 = math.inf
    for j in levels:
        d1 = delta_kappa(design, kernel, j, 1, config.aux_poly)
        j_pow = 1.0 if j == 0 else float(j) ** config.lambda1
        c1 = max(c1, d1 * eps / (2.0 ** (2.0 * config.nu * j) * j_pow))
        members = frequency_set(MeyerSpec(0, 0, config.aux_poly), j).members
        t1 = tau_kappa(design, kernel, members, 1)
        k3 = min(k3, float(np.min(t1 * np.abs(members).astype(float) ** config.nu) / eps))
    if not (k3 > 0 and math.isfinite(k3)):
        raise NumericError("could not bound tau_1 from below on the used levels")
    return h1, c1, k3


def calibrate_mu(design: ChannelDesign, kernel: BlurKernel, config: EstimatorConfig,
                 reps: int = 50, seed: int = 0,
                 grid=(0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0),
                 max_false_keep: float = 0.01) -> float:
    """Smallest mu on ``grid`` whose null-block false-keep rate is <= the target.

    Pilot simulation with f = 0: all block energies are pure noise, so kept
    blocks are false keeps by construction.
    """
    f0 = FourierSeries.zeros(1)
    eps, n_star = epsilon_n(design)
    if config.level_override is not None:
        j0, J = config.level_override
    else:
        j0, J, _ = choose_levels(n_star, config, N=design.N)
    if J <= j0:
        return min(grid)
    spec = MeyerSpec(j0, J, config.aux_poly)
    energies: dict[int, list] = {j: [] for j in range(j0, J)}
    for rep in range(reps):
        y = simulate_observations(f0, design, kernel,
                                  np.random.SeedSequence(seed, spawn_key=(rep,)))
        f_hat, _ = fourier_deconvolve(y, design, kernel, config.denom_tol)
        coeffs = analyze(f_hat, spec)
        for j in range(j0, J):
            part = block_partition(j, design.n)
            vec = coeffs.detail[j]
            energies[j].extend(
                float(np.sum(np.abs(vec[s:e]) ** 2)) for s, e in part.blocks
            )
    for mu in sorted(grid):
        trial = EstimatorConfig(mu=mu, nu=config.nu, lambda1=config.lambda1,
                                denom_tol=config.denom_tol, aux_poly=config.aux_poly)
        false_keeps = total = 0
        for j, vals in energies.items():
            lam = threshold_value(j, n_star, design.n, trial)
            false_keeps += sum(v >= lam for v in vals)
            total += len(vals)
        if total and false_keeps / total <= max_false_keep:
            return mu
    return max(grid)
