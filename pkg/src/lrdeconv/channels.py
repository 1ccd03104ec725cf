"""Channel designs, blur kernels, the observation model, and the design
functionals that control estimator variance.

A design holds M channel points u_l, per-channel memory exponents d_l, the
per-channel sample count N (a power of two) and the per-channel noise laws.
Observations are

    y(u_l, t_i) = (g(u_l, .) * f)(t_i) + xi_{l,i},

synthesized by inverse DFT of the product g_m(u_l) f_m, with each channel's
noise drawn independently from its NoiseModel.

Design functionals:

    tau_kappa(m, n)  = M^-1 sum_l N^(-2 kappa d_l) |g_m(u_l)|^(2 kappa)
    delta_kappa(j,n) = |C_j|^-1 sum_{m in C_j} tau_kappa(m,n) tau_1(m,n)^(-2 kappa)
    eps_n            = M^-1 sum_l N^(-2 d_l),    n* = n * eps_n
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateFitError, IllPosedFrequencyError
from .fourier import FourierSeries
from .meyer import MeyerSpec, frequency_set, scaling_frequency_set
from .noise import NoiseModel, sample_paths

__all__ = [
    "ChannelDesign",
    "BlurKernel",
    "KernelFit",
    "DesignFunctionals",
    "kernel_fourier",
    "simulate_observations",
    "tau_kappa",
    "delta_kappa",
    "epsilon_n",
    "boxcar_S_closed_form",
    "characterize_kernel",
    "design_functionals",
    "load_kernel_table",
    "save_kernel_table",
]

D_MAX = 0.5
TAU_FLOOR = 1e-300


@dataclass(frozen=True)
class ChannelDesign:
    """M channels at points u with memory exponents d, N samples each."""

    u: tuple
    d: tuple
    N: int
    noise: tuple

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(x) for x in self.u))
        object.__setattr__(self, "d", tuple(float(x) for x in self.d))
        object.__setattr__(self, "noise", tuple(self.noise))
        if len(self.u) != len(self.d) or len(self.u) != len(self.noise):
            raise ConfigError("u, d and noise must have one entry per channel")
        if len(self.u) < 1:
            raise ConfigError("design needs at least one channel")
        if self.N < 2 or self.N & (self.N - 1):
            raise ConfigError(f"N must be a power of 2, got {self.N}")
        for dl in self.d:
            if not 0.0 <= dl < D_MAX:
                raise ConfigError(f"memory exponents must satisfy 0 <= d_l < 1/2, got {dl}")
        for mod, dl in zip(self.noise, self.d):
            if not isinstance(mod, NoiseModel):
                raise ConfigError("noise entries must be NoiseModel instances")
            if abs(mod.d - dl) > 1e-12:
                raise ConfigError("noise model memory exponent must match design d_l")

    @property
    def M(self) -> int:
        return len(self.u)

    @property
    def n(self) -> int:
        return self.N * self.M

    @property
    def d_star(self) -> float:
        return max(self.d)

    @property
    def theta(self) -> float:
        """log M / log n, the channel-growth diagnostic."""
        return math.log(self.M) / math.log(self.n)

    def u_array(self) -> np.ndarray:
        return np.asarray(self.u)

    def d_array(self) -> np.ndarray:
        return np.asarray(self.d)


@dataclass(frozen=True)
class BlurKernel:
    """Functional Fourier coefficients g_m(u) of the blurring family.

    kinds:
      heat      g_m(u) = exp(-4 pi^2 m^2 u)
      dirichlet g_m(u) = c * u^|m|
      boxcar    g_0(u) = 1, g_m(u) = q(u) sin(2 pi m u) / (2 pi m)
                with affine weight q(u) = q0 + q1 u, 0 < q_min <= q <= q_max
      table     explicit matrix over (m, channel)
    """

    kind: str
    c: float = 1.0
    q: tuple = (1.0, 0.0)
    table_m: tuple = ()
    table_u: tuple = ()
    table_g: tuple = ()

    def __post_init__(self):
        if self.kind not in ("heat", "dirichlet", "boxcar", "table"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        if len(self.q) != 2:
            raise ConfigError("boxcar weight must be affine: q = (q0, q1)")
        if self.kind == "table" and (not self.table_m or not self.table_u):
            raise ConfigError("table kernel requires table_m, table_u and table_g")

    def weight(self, u: np.ndarray) -> np.ndarray:
        return self.q[0] + self.q[1] * np.asarray(u, dtype=float)

    def weight_bounds(self, u: np.ndarray) -> tuple[float, float]:
        q = self.weight(u)
        return float(q.min()), float(q.max())


@dataclass(frozen=True)
class KernelFit:
    """Fitted decay template tau_1(m, n) ~ eps_n |m|^-nu (ln|m|)^-lam exp(-alpha |m|^beta)."""

    nu: float
    lam: float
    alpha: float
    beta: float
    regime: str  # "regular" | "supersmooth"
    residual: float
    residual_regular: float
    residual_supersmooth: float


@dataclass(frozen=True)
class DesignFunctionals:
    """tau/Delta tables plus eps_n and n* for one design and kernel."""

    m: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    tau4: np.ndarray
    levels: tuple
    delta1: np.ndarray
    delta2: np.ndarray
    epsilon_n: float
    n_star: float


def _sin_2pi(x: np.ndarray) -> np.ndarray:
    """sin(2 pi x) with exact zeros whenever 2x is an integer in floating point."""
    r = np.mod(2.0 * np.asarray(x, dtype=float), 2.0)
    k = np.round(r)
    sign = np.where(np.mod(k, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(np.pi * (r - k))


def kernel_fourier(kernel: BlurKernel, u, m) -> np.ndarray:
    """g_m(u); broadcasts over channel points u (rows) and frequencies m (cols)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))[:, None]
    m_arr = np.atleast_1d(np.asarray(m, dtype=int))[None, :]

    if kernel.kind == "heat":
        if np.any(u_arr < 0):
            raise ConfigError("heat kernel requires u >= 0")
        out = np.exp(-4.0 * np.pi ** 2 * m_arr.astype(float) ** 2 * u_arr).astype(complex)
    elif kernel.kind == "dirichlet":
        if np.any((u_arr <= 0) | (u_arr >= 1)):
            raise ConfigError("dirichlet kernel requires 0 < u < 1")
        out = (kernel.c * u_arr ** np.abs(m_arr).astype(float)).astype(complex)
    elif kernel.kind == "boxcar":
        mf = m_arr.astype(float)
        q = kernel.weight(u_arr)
        # folded sine so resonant channels (2 m u integer) give an exact zero
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = q * _sin_2pi(mf * u_arr) / (2 * np.pi * mf)
        out = np.where(m_arr == 0, 1.0, vals).astype(complex)
    else:
        out = _table_lookup(kernel, u_arr[:, 0], m_arr[0, :])

    scalar = np.isscalar(u) and np.isscalar(m)
    return complex(out[0, 0]) if scalar else out


def _table_lookup(kernel: BlurKernel, u: np.ndarray, m: np.ndarray) -> np.ndarray:
    tab_u = np.asarray(kernel.table_u, dtype=float)
    tab_m = np.asarray(kernel.table_m, dtype=int)
    g = np.asarray(kernel.table_g, dtype=complex).reshape(len(tab_m), len(tab_u))
    cols = np.empty(len(u), dtype=int)
    for i, ui in enumerate(u):
        j = int(np.argmin(np.abs(tab_u - ui)))
        if abs(tab_u[j] - ui) > 1e-9 * max(1.0, abs(ui)):
            raise ConfigError(f"kernel table has no column for u = {ui}")
        cols[i] = j
    rows = np.empty(len(m), dtype=int)
    index = {int(mm): i for i, mm in enumerate(tab_m)}
    for i, mi in enumerate(m):
        try:
            rows[i] = index[int(mi)]
        except KeyError:
            raise ConfigError(f"kernel table has no row for m = {int(mi)}") from None
    return g[np.ix_(rows, cols)].T  # (len(u), len(m))


def simulate_observations(f: FourierSeries, design: ChannelDesign,
                          kernel: BlurKernel, seed) -> np.ndarray:
    """M x N observation matrix: blurred truth plus per-channel noise rows.

    Channel l's noise stream is seeded by spawn key (l,) off the master
    seed, so rows are reproducible independently of generation order.
    """
    N = design.N
    if f.band > N // 2 - 1:
        raise ConfigError(f"truth band {f.band} exceeds alias-free band {N // 2 - 1}")
    g = kernel_fourier(kernel, design.u_array(), f.m)  # (M, 2B+1)
    assembled = np.zeros((design.M, N), dtype=complex)
    idx = np.mod(f.m, N)
    assembled[:, idx] = g * f.values[None, :]
    signal = (N * np.fft.ifft(assembled, axis=1)).real
    noise = sample_paths(design.noise, N, seed)
    return signal + noise


def tau_kappa(design: ChannelDesign, kernel: BlurKernel, m, kappa: int) -> np.ndarray:
    """M^-1 sum_l N^(-2 kappa d_l) |g_m(u_l)|^(2 kappa)."""
    if kappa not in (1, 2, 4):
        raise ConfigError("kappa must be 1, 2 or 4")
    g = kernel_fourier(kernel, design.u_array(), np.atleast_1d(m))
    weights = float(design.N) ** (-2.0 * kappa * design.d_array())
    out = (weights[:, None] * np.abs(g) ** (2 * kappa)).mean(axis=0)
    return float(out[0]) if np.isscalar(m) else out


def delta_kappa(design: ChannelDesign, kernel: BlurKernel, j: int, kappa: int,
                aux_poly: str = "poly7") -> float:
    """|C_j|^-1 sum_{m in C_j} tau_kappa(m,n) [tau_1(m,n)]^(-2 kappa)."""
    if kappa not in (1, 2):
        raise ConfigError("kappa must be 1 or 2")
    members = frequency_set(MeyerSpec(0, 0, aux_poly), j).members
    t1 = tau_kappa(design, kernel, members, 1)
    if np.any(t1 <= TAU_FLOOR):
        bad = members[t1 <= TAU_FLOOR]
        raise IllPosedFrequencyError(
            f"tau_1 vanishes on C_{j} at m in {bad[:8].tolist()}; level is ill-posed"
        )
    tk = t1 if kappa == 1 else tau_kappa(design, kernel, members, kappa)
    return float(np.mean(tk * t1 ** (-2.0 * kappa)))


def epsilon_n(design: ChannelDesign) -> tuple[float, float]:
    """Noise-reduction factor eps_n = M^-1 sum_l N^(-2 d_l) and n* = n eps_n."""
    eps = float(np.mean(float(design.N) ** (-2.0 * design.d_array())))
    return eps, eps * design.n


def boxcar_S_closed_form(m: int, M: int, N: int, a1: float) -> float:
    """S(m,n) = M^-1 sum_{l=1}^M sin^2(2 pi m l / M) N^(-2 a1 l / M), in closed form.

    With p = N^(-2 a1 / M) and x = 4 pi m / M (so that cos(Mx) = 1), summing
    the geometric series behind sin^2 = (1 - cos)/2 gives

    S = p (p+1) (1 - p^M) (1 - cos x) / (2 M (1-p) [(1-p)^2 + 2 p (1 - cos x)]).

    The resonant case 2m = 0 (mod M) gives exactly 0; a1 = 0 falls back to
    the direct sum.
    """
    if M < 1 or N < 2:
        raise ConfigError("need M >= 1 and N >= 2")
    if a1 < 0:
        raise ConfigError("a1 must be >= 0")
    if (2 * m) % M == 0:
        return 0.0
    if a1 == 0.0:
        l = np.arange(1, M + 1)
        return float(np.mean(np.sin(2 * np.pi * ((m * l) % M) / M) ** 2))
    t = 2.0 * a1 * math.log(N) / M
    p = math.exp(-t)
    one_minus_p = -math.expm1(-t)
    one_minus_pM = -math.expm1(-2.0 * a1 * math.log(N))
    one_minus_cos = 2.0 * math.sin(math.pi * ((2 * m) % M) / M) ** 2
    num = p * (p + 1.0) * one_minus_pM * one_minus_cos
    den = 2.0 * M * one_minus_p * (one_minus_p ** 2 + 2.0 * p * one_minus_cos)
    return num / den


def characterize_kernel(design: ChannelDesign, kernel: BlurKernel, m_range) -> KernelFit:
    """Fit the decay of tau_1(m, n) over a frequency range.

    Two templates are fitted by least squares on log tau_1: a regular one in
    {1, log m, log log m} and a super-smooth one in {1, log m, m^beta} over a
    beta grid. The regime is the template with decisively smaller residual.
    The exponent convention is tau_1 ~ |m|^(-nu), matching the rate formulas.
    """
    m = np.asarray(m_range, dtype=int)
    m = m[m >= 2]
    if m.size < 8 or m.max() < 2 * m.min():
        raise ConfigError("m_range must span at least one dyadic octave with m >= 2")
    t1 = tau_kappa(design, kernel, m, 1)
    keep = t1 > TAU_FLOOR
    if not np.any(keep):
        raise DegenerateFitError("tau_1 is identically zero over the requested range")
    m, t1 = m[keep], t1[keep]
    y = np.log(t1)
    logm = np.log(m.astype(float))

    def ols(X):
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        return coef, float(resid @ resid)

    ones = np.ones_like(logm)

    # regular template, with a parsimony rule for the collinear log log term
    coef_plain, rss_plain = ols(np.column_stack([ones, logm]))
    coef_full, rss_full = ols(np.column_stack([ones, logm, np.log(logm)]))
    if rss_full < 0.95 * rss_plain:
        nu_reg, lam_reg, rss_reg = -coef_full[1], -coef_full[2], rss_full
    else:
        nu_reg, lam_reg, rss_reg = -coef_plain[1], 0.0, rss_plain

    # super-smooth template over a beta grid, then one local refinement
    def ss_fit(beta):
        coef, rss = ols(np.column_stack([ones, logm, m.astype(float) ** beta]))
        return coef, rss

    betas = np.arange(0.25, 3.01, 0.25)
    fits = [ss_fit(b) for b in betas]
    i_best = int(np.argmin([rss for _, rss in fits]))
    fine = np.arange(max(0.05, betas[i_best] - 0.2), betas[i_best] + 0.21, 0.05)
    fits_fine = [ss_fit(b) for b in fine]
    j_best = int(np.argmin([rss for _, rss in fits_fine]))
    coef_ss, rss_ss = fits_fine[j_best]
    beta_ss, alpha_ss, nu_ss = float(fine[j_best]), -coef_ss[2], -coef_ss[1]

    y_spread = float(np.var(y)) * y.size
    if y_spread <= 1e-12:
        # flat tau_1: no decay at all
        return KernelFit(0.0, 0.0, 0.0, beta_ss, "regular", 0.0, rss_reg, rss_ss)
    if rss_ss < 0.25 * rss_reg and alpha_ss > 0:
        return KernelFit(float(nu_ss), 0.0, float(alpha_ss), beta_ss,
                         "supersmooth", rss_ss, rss_reg, rss_ss)
    return KernelFit(float(nu_reg), float(lam_reg), 0.0, beta_ss,
                     "regular", rss_reg, rss_reg, rss_ss)


def design_functionals(design: ChannelDesign, kernel: BlurKernel,
                       spec: MeyerSpec) -> DesignFunctionals:
    """Tabulate tau_kappa over the band needed by ``spec`` and delta_kappa per level."""
    band = int(np.abs(scaling_frequency_set(spec, spec.j0).members).max())
    for j in spec.detail_levels:
        band = max(band, int(np.abs(frequency_set(spec, j).members).max()))
    m = np.arange(1, band + 1)
    t1 = tau_kappa(design, kernel, m, 1)
    t2 = tau_kappa(design, kernel, m, 2)
    t4 = tau_kappa(design, kernel, m, 4)
    levels = tuple(spec.detail_levels)
    d1 = np.array([delta_kappa(design, kernel, j, 1, spec.aux_poly) for j in levels])
    d2 = np.array([delta_kappa(design, kernel, j, 2, spec.aux_poly) for j in levels])
    eps, n_star = epsilon_n(design)
    return DesignFunctionals(m, t1, t2, t4, levels, d1, d2, eps, n_star)


def save_kernel_table(path, m_values, u_values, g_matrix):
    """Write a kernel table: one row per m, columns per channel, entries 're,im'."""
    g = np.asarray(g_matrix, dtype=complex)
    with open(path, "w") as fh:
        fh.write("# kernel table: rows m, columns l; entries re,im\n")
        fh.write("# u " + " ".join(f"{u:.17g}" for u in u_values) + "\n")
        for mi, row in zip(m_values, g):
            cells = " ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row)
            fh.write(f"{int(mi)} {cells}\n")


def load_kernel_table(path) -> BlurKernel:
    """Read a kernel table written by ``save_kernel_table``."""
    u_values: list[float] = []
    m_values: list[int] = []
    rows: list[list[complex]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "u":
                    u_values = [float(x) for x in parts[1:]]
                continue
            cells = line.split()
            m_values.append(int(cells[0]))
            row = []
            for cell in cells[1:]:
                re, im = cell.split(",")
                row.append(complex(float(re), float(im)))
            rows.append(row)
    if not rows or not u_values:
        raise ConfigError(f"kernel table {path} is empty or lacks a '# u ...' header")
    widths = {len(r) for r in rows}
    if widths != {len(u_values)}:
        raise ConfigError("kernel table rows must match the u header length")
    g = np.asarray(rows, dtype=complex)
    if not np.all(np.isfinite(g.view(float))):
        raise ConfigError("kernel table entries must be finite")
    return BlurKernel(
        kind="table",
        table_m=tuple(m_values),
        table_u=tuple(u_values),
        table_g=tuple(g.ravel().tolist()),
    )
