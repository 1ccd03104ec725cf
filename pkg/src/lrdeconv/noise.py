"""Stationary Gaussian error sequences with long-range dependence.

Three families are supported, all with spectral density behaving like
|lambda|^(-2d) near the origin for a memory exponent d in [0, 1/2):

* ``white``  -- iid Gaussian, d = 0,
* ``farima`` -- fractional ARIMA(0, d, 0) driven by innovations with
  standard deviation ``scale``,
* ``fgn``    -- fractional Gaussian noise with Hurst index H = d + 1/2.

Exact sampling uses circulant embedding of the Toeplitz covariance
(Davies-Harte); a dense Cholesky fallback covers the rare embeddings with a
negative spectrum.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import ConfigError, NumericError, SizeLimitError

__all__ = [
    "NoiseModel",
    "CovarianceSummary",
    "spectral_density",
    "autocovariance",
    "sample_path",
    "sample_paths",
    "toeplitz_eigen_bounds",
]

# Embedding spectra below -NEG_TOL * gamma(0) trigger the Cholesky fallback.
NEG_TOL = 1e-10
CHOLESKY_LIMIT = 2 ** 14
DENSE_EIGEN_LIMIT = 4096


@dataclass(frozen=True)
class NoiseModel:
    """A zero-mean stationary Gaussian law: kind, memory exponent d, scale."""

    kind: str
    d: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("white", "farima", "fgn"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.d < 0.5:
            raise ConfigError(f"memory exponent must satisfy 0 <= d < 1/2, got {self.d}")
        if not self.scale > 0:
            raise ConfigError(f"scale must be > 0, got {self.scale}")
        if self.kind == "white" and self.d != 0.0:
            raise ConfigError("white noise requires d = 0")

    @property
    def hurst(self) -> float:
        """Hurst index H = d + 1/2 (the fGn parametrization)."""
        return self.d + 0.5

    @classmethod
    def white(cls, scale: float = 1.0) -> "NoiseModel":
        return cls("white", 0.0, scale)

    @classmethod
    def farima(cls, d: float, scale: float = 1.0) -> "NoiseModel":
        return cls("farima", d, scale)

    @classmethod
    def fgn(cls, hurst: float, scale: float = 1.0) -> "NoiseModel":
        if not 0.5 <= hurst < 1.0:
            raise ConfigError(f"fGn requires 1/2 <= H < 1, got {hurst}")
        return cls("fgn", hurst - 0.5, scale)


@dataclass(frozen=True)
class CovarianceSummary:
    """Extreme eigenvalues of the N x N Toeplitz covariance and N^(2d) ratios."""

    n_points: int
    lambda_min: float
    lambda_max: float
    ratio_min: float
    ratio_max: float


def spectral_density(model: NoiseModel, lam) -> np.ndarray:
    """Spectral density a(lambda) on [-pi, pi].

    White: scale^2 / (2 pi).  FARIMA(0,d,0):
    (scale^2 / 2 pi) |2 (1 - cos lambda)|^(-d).  fGn: the classical
    4 sin^2(lambda/2) * sum_k |k + lambda/(2 pi)|^(-2H-1) series, evaluated
    exactly through Hurwitz zeta functions.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(np.abs(lam_arr) > np.pi + 1e-12):
        raise ConfigError("spectral density defined on [-pi, pi] only")
    if model.d > 0 and np.any(lam_arr == 0.0):
        raise NumericError("spectral density has a pole at lambda = 0 when d > 0")

    sigma2 = model.scale ** 2
    if model.kind == "white" or (model.kind == "farima" and model.d == 0.0):
        out = np.full_like(lam_arr, sigma2 / (2 * np.pi))
        return out if out.shape else float(out)

    if model.kind == "farima":
        out = sigma2 / (2 * np.pi) * np.abs(2.0 * (1.0 - np.cos(lam_arr))) ** (-model.d)
        return out if out.shape else float(out)

    # fGn: sum_{k in Z} |k + x|^(-s) = zeta(s, x) + zeta(s, 1 - x), x in (0, 1)
    H = model.hurst
    s = 2 * H + 1
    x = np.abs(lam_arr) / (2 * np.pi)
    zero = x == 0.0
    xs = np.where(zero, 0.25, x)  # placeholder, overwritten below
    series = special.zeta(s, xs) + special.zeta(s, 1.0 - xs)
    const = sigma2 * (2 * np.pi) ** (-2 * H - 2) * special.gamma(2 * H + 1) * np.sin(np.pi * H)
    out = const * 4.0 * np.sin(lam_arr / 2.0) ** 2 * series
    if np.any(zero):  # only reachable for H = 1/2 (d = 0): the white limit
        out = np.where(zero, sigma2 / (2 * np.pi), out)
    return out if out.shape else float(out)


def autocovariance(model: NoiseModel, lag) -> np.ndarray:
    """Autocovariance gamma(lag) consistent with ``spectral_density``.

    FARIMA uses the closed form
    gamma(k) = scale^2 * G(1-2d) G(k+d) / (G(d) G(1-d) G(k+1-d)) for d > 0
    (log-gamma evaluated to avoid overflow); fGn uses
    gamma(k) = (scale^2/2) (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
    """
    k = np.abs(np.asarray(lag))
    sigma2 = model.scale ** 2

    if model.kind == "fgn":
        H2 = 2.0 * model.hurst
        kf = k.astype(float)
        out = 0.5 * sigma2 * ((kf + 1) ** H2 - 2 * kf ** H2 + np.abs(kf - 1) ** H2)
        return out if out.shape else float(out)

    if model.kind == "white" or model.d == 0.0:
        out = np.where(k == 0, sigma2, 0.0)
        return out if out.shape else float(out)

    d = model.d
    kf = k.astype(float)
    log_g = (
        special.gammaln(1 - 2 * d)
        + special.gammaln(kf + d)
        - special.gammaln(d)
        - special.gammaln(1 - d)
        - special.gammaln(kf + 1 - d)
    )
    out = sigma2 * np.exp(log_g)
    return out if out.shape else float(out)


@functools.lru_cache(maxsize=4096)
def _embedding_spectrum(model: NoiseModel, n_points: int):
    """FFT spectrum of the circulant embedding of size 2(N-1), or None.

    Returns (sqrt(spectrum / m), m) when the embedding is nonnegative
    (entries below -NEG_TOL * gamma(0) reject it), otherwise None.
    """
    if n_points == 1:
        gamma0 = float(autocovariance(model, 0))
        return np.array([math.sqrt(gamma0)]), 1
    gamma = np.asarray(autocovariance(model, np.arange(n_points)), dtype=float)
    c = np.concatenate([gamma, gamma[-2:0:-1]])
    m = c.size  # 2 (N - 1)
    eigs = np.fft.fft(c).real
    if eigs.min() < -NEG_TOL * gamma[0]:
        return None
    return np.sqrt(np.clip(eigs, 0.0, None) / m), m


@functools.lru_cache(maxsize=64)
def _cholesky_factor(model: NoiseModel, n_points: int) -> np.ndarray:
    if n_points > CHOLESKY_LIMIT:
        raise SizeLimitError(
            f"circulant embedding failed and N = {n_points} exceeds the "
            f"Cholesky fallback limit {CHOLESKY_LIMIT}"
        )
    gamma = np.asarray(autocovariance(model, np.arange(n_points)), dtype=float)
    return linalg.cholesky(linalg.toeplitz(gamma), lower=True)


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _draw_embedding_normals(rng: np.random.Generator, m: int) -> np.ndarray:
    """Conjugate-symmetric complex Gaussian weights for one embedding draw."""
    z = rng.standard_normal(m)
    xi = np.empty(m, dtype=complex)
    half = m // 2
    xi[0] = z[0]
    if m % 2 == 0:
        xi[half] = z[1]
        a = z[2 : 2 + half - 1]
        b = z[2 + half - 1 :]
        xi[1:half] = (a + 1j * b) / math.sqrt(2.0)
        xi[half + 1 :] = np.conj(xi[1:half][::-1])
    else:
        a = z[1 : 1 + half]
        b = z[1 + half :]
        xi[1 : half + 1] = (a + 1j * b) / math.sqrt(2.0)
        xi[half + 1 :] = np.conj(xi[1 : half + 1][::-1])
    return xi


def sample_path(model: NoiseModel, n_points: int, seed) -> np.ndarray:
    """One exact draw from N(0, [gamma(j-k)]), deterministic in (model, n, seed)."""
    if n_points < 1:
        raise ConfigError("n_points must be >= 1")
    rng = np.random.default_rng(_as_seed_sequence(seed))
    emb = _embedding_spectrum(model, n_points)
    if emb is not None:
        sqrt_spec, m = emb
        if n_points == 1:
            return sqrt_spec * rng.standard_normal(1)
        xi = _draw_embedding_normals(rng, m)
        return np.fft.fft(sqrt_spec * xi).real[:n_points]
    chol = _cholesky_factor(model, n_points)
    return chol @ rng.standard_normal(n_points)


def sample_paths(models, n_points: int, master_seed) -> np.ndarray:
    """Independent rows, one per model, with per-row derived seeds.

    Row l is drawn from the generator seeded by
    SeedSequence(master_seed, spawn_key=(l,)), so results are identical
    whether rows are produced jointly (batched FFT) or one at a time.
    """
    models = list(models)
    root = _as_seed_sequence(master_seed)

    def row_seed(i: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(root.entropy, spawn_key=tuple(root.spawn_key) + (i,))

    embs = [_embedding_spectrum(mod, n_points) for mod in models]
    out = np.empty((len(models), n_points))
    batch_rows = [i for i, e in enumerate(embs) if e is not None and n_points > 1]
    if batch_rows:
        m = embs[batch_rows[0]][1]
        weighted = np.empty((len(batch_rows), m), dtype=complex)
        for row, i in enumerate(batch_rows):
            rng = np.random.default_rng(row_seed(i))
            weighted[row] = embs[i][0] * _draw_embedding_normals(rng, m)
        out[batch_rows] = np.fft.fft(weighted, axis=1).real[:, :n_points]
    for i, e in enumerate(embs):
        if i in batch_rows:
            continue
        out[i] = sample_path(models[i], n_points, row_seed(i))
    return out


def toeplitz_eigen_bounds(model: NoiseModel, n_points: int) -> CovarianceSummary:
    """Extreme eigenvalues of the covariance matrix and their N^(2d) ratios."""
    if n_points < 2:
        raise ConfigError("n_points must be >= 2")
    if n_points > DENSE_EIGEN_LIMIT:
        raise SizeLimitError(
            f"dense eigensolve limited to N <= {DENSE_EIGEN_LIMIT}, got {n_points}"
        )
    gamma = np.asarray(autocovariance(model, np.arange(n_points)), dtype=float)
    eigs = linalg.eigvalsh(linalg.toeplitz(gamma))
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    norm = float(n_points) ** (2 * model.d)
    return CovarianceSummary(n_points, lam_min, lam_max, lam_min / norm, lam_max / norm)
