"""Configuration-driven command line front end.

Subcommands: simulate | estimate | bench | eigencheck | characterize.
Common flags: --config PATH, --seed U64, --out DIR, --threads INT, --dry-run.
Exit codes: 0 ok, 1 configuration error, 2 numeric failure, 3 I/O failure.

All primary outputs are plain text with 17-significant-digit numbers and a
header carrying the config hash, so identical (config, seed) runs produce
byte-identical files regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import characterize_kernel, epsilon_n, simulate_observations
from .config import (
    RunConfig,
    build_estimator_config,
    build_ball,
    build_kernel,
    build_truth,
    config_hash,
    design_for_n,
    eigencheck_models,
    load_config,
)
from .errors import ConfigError, NumericError
from .estimator import block_partition, choose_levels, estimate, threshold_value
from .fourier import coeffs_to_grid
from .meyer import MeyerSpec, analyze, scaling_frequency_set, frequency_set
from .noise import toeplitz_eigen_bounds
from .riskbench import besov_seminorm, fit_rate, mc_risk

FMT = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FMT % float(x)


def _header(cfg: RunConfig, command: str, seed: int) -> list[str]:
    return [
        f"# lrdeconv {__version__}",
        f"# command={command}",
        f"# config_hash={config_hash(cfg)}",
        f"# seed={seed}",
    ]


def _write_table(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_manifest(out: Path, cfg: RunConfig, command: str, seed: int) -> None:
    manifest = {
        "command": command,
        "config_hash": config_hash(cfg),
        "experiment": cfg.experiment,
        "seed": seed,
        "version": __version__,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_hash(path: Path) -> str:
    with open(path) as fh:
        for line in fh:
            if line.startswith("# config_hash="):
                return line.strip().split("=", 1)[1]
            if not line.startswith("#"):
                break
    raise ConfigError(f"{path} carries no config hash header")


def cmd_simulate(cfg: RunConfig, seed: int, out: Path, args) -> int:
    design = design_for_n(cfg, int(cfg.design["n"]))
    kernel = build_kernel(cfg)
    truth = build_truth(cfg)
    if args.dry_run:
        print(f"simulate: M={design.M} N={design.N} n={design.n} band={truth.band}")
        return 0
    y = simulate_observations(truth, design, kernel, seed)
    header = _header(cfg, "simulate", seed)
    with open(out / "y.csv", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write(f"# rows=channels M={design.M}, cols=N={design.N}\n")
        for row in y:
            fh.write(",".join(FMT % v for v in row) + "\n")
    _write_table(out / "truth_fourier.csv", header, ["m", "re", "im"],
                 [(int(m), v.real, v.imag) for m, v in zip(truth.m, truth.values)])
    grid = coeffs_to_grid(truth, design.N).real
    _write_table(out / "truth_grid.csv", header, ["i", "t", "value"],
                 [(i, i / design.N, v) for i, v in enumerate(grid)])
    _write_manifest(out, cfg, "simulate", seed)
    print(f"simulate: wrote y.csv ({design.M}x{design.N}) to {out}")
    return 0


def _load_y(path: Path, cfg: RunConfig) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"missing input file {path}")
    if _read_hash(path) != config_hash(cfg):
        raise ConfigError(
            f"{path} was produced under a different config hash; refusing to mix runs"
        )
    rows = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            if line.startswith("#"):
                continue
            try:
                rows.append([float(x) for x in line.strip().split(",")])
            except ValueError as exc:
                raise ConfigError(f"{path}:{i + 1}: not a numeric data row") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{path} is empty or has ragged rows")
    return np.asarray(rows)


def cmd_estimate(cfg: RunConfig, seed: int, out: Path, args) -> int:
    design = design_for_n(cfg, int(cfg.design["n"]))
    kernel = build_kernel(cfg)
    est_cfg = build_estimator_config(cfg)
    if args.dry_run:
        _, n_star = epsilon_n(design)
        j0, J, _ = choose_levels(n_star, est_cfg, N=design.N)
        print(f"estimate: n*={n_star:.6g} j0={j0} J={J}")
        return 0
    y = _load_y(out / "y.csv", cfg)
    if y.shape != (design.M, design.N):
        raise ConfigError(
            f"y.csv shape {y.shape} does not match the configured design "
            f"{design.M}x{design.N}"
        )
    result = estimate(y, design, kernel, est_cfg)
    header = _header(cfg, "estimate", seed)
    _write_table(out / "fhat_grid.csv", header, ["i", "t", "value"],
                 [(i, i / design.N, v) for i, v in enumerate(result.grid)])

    coeff_rows = []
    co = result.coeffs
    for k, v in enumerate(co.scaling):
        coeff_rows.append(("a", co.j0, k, v.real, 0, 1))
    for j in range(co.j0, co.J):
        part = block_partition(j, design.n)
        kept_by_block = {d.block: d.kept for d in result.decisions if d.level == j}
        for k, v in enumerate(co.detail[j]):
            r = k // part.block_len + 1
            coeff_rows.append(("b", j, k, v.real, r, int(kept_by_block.get(r, True))))
    _write_table(out / "coefficients.csv", header,
                 ["type", "j", "k", "value", "block", "kept"], coeff_rows)
    _write_table(out / "decisions.csv", header,
                 ["j", "block", "energy", "threshold", "kept"],
                 [(d.level, d.block, d.energy, d.threshold, int(d.kept))
                  for d in result.decisions])
    diag = result.diagnostics
    diag_rows = [("epsilon_n", diag.epsilon_n), ("n_star", diag.n_star),
                 ("j0", diag.j0), ("J", diag.J),
                 ("n_ill_posed", len(diag.ill_posed))]
    diag_rows += [("ill_posed_m", m) for m in diag.ill_posed]
    diag_rows += [(f"kept_blocks_j{j}", k) for j, k in sorted(diag.kept_blocks.items())]
    diag_rows += [(f"total_blocks_j{j}", k) for j, k in sorted(diag.total_blocks.items())]
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("key,value\n")
        for key, val in diag_rows:
            fh.write(f"{key},{_fmt(val)}\n")
    _write_manifest(out, cfg, "estimate", seed)
    print(f"estimate: wrote fhat_grid.csv, coefficients.csv, decisions.csv to {out}")
    return 0


def _bench_plan(cfg: RunConfig, est_cfg) -> list[str]:
    lines = []
    for n in cfg.bench["n_grid"]:
        design = design_for_n(cfg, int(n))
        _, n_star = epsilon_n(design)
        j0, J, _ = choose_levels(n_star, est_cfg, N=design.N)
        if est_cfg.supersmooth or j0 == J:
            lams = "(linear estimator, no detail levels)"
        else:
            lams = " ".join(
                f"lambda_{j}={threshold_value(j, n_star, design.n, est_cfg):.3e}"
                for j in range(j0, J)
            )
        lines.append(
            f"n={design.n} M={design.M} N={design.N} n*={n_star:.6g} j0={j0} J={J} {lams}"
        )
    return lines


def cmd_bench(cfg: RunConfig, seed: int, out: Path, args) -> int:
    if cfg.bench is None:
        raise ConfigError("bench command requires a 'bench' section")
    est_cfg = build_estimator_config(cfg)
    if args.dry_run:
        for line in _bench_plan(cfg, est_cfg):
            print(line)
        return 0
    kernel = build_kernel(cfg)
    truth = build_truth(cfg)
    ball = build_ball(cfg) if cfg.bench.get("ball") else None
    reps = int(cfg.bench.get("reps", 100))
    report = mc_risk(truth, lambda n: design_for_n(cfg, n), kernel, est_cfg,
                     [int(n) for n in cfg.bench["n_grid"]], reps, seed,
                     ball=ball, nu=est_cfg.nu, threads=args.threads)
    regressor = cfg.bench.get("regressor", "log_nstar")
    try:
        slope, slope_se, r2 = fit_rate(report, regressor)
    except NumericError:
        slope = slope_se = r2 = float("nan")

    seminorm = None
    if ball is not None:
        seminorm = _truth_seminorm(truth, ball)
        report.seminorm = seminorm

    header = _header(cfg, "bench", seed)
    _write_table(out / "risk_report.csv", header,
                 ["n", "M", "N", "n_star", "risk_mean", "risk_se", "reps"], report.rows)
    xs = np.log(report.column("n_star").astype(float))
    if regressor == "log_log_nstar":
        xs = np.log(xs)
    ys = np.log(report.column("risk_mean").astype(float))
    with open(out / "risk_curve.dat", "w") as fh:
        for line in header:
            fh.write(line + "\n")
        for x, y in zip(xs, ys):
            fh.write(f"{FMT % x} {FMT % y}\n")

    meta = {
        "config_hash": config_hash(cfg),
        "experiment": cfg.experiment,
        "fitted_slope": slope,
        "fitted_slope_se": slope_se,
        "r_squared": r2,
        "regressor": regressor,
        "reps": reps,
        "seed": seed,
    }
    if report.forecast is not None:
        meta["forecast"] = {
            "regime": report.forecast.regime,
            "exponent": report.forecast.exponent,
            "log_exponent": report.forecast.log_exponent,
            "rho": report.forecast.rho,
        }
    if seminorm is not None:
        meta["ball"] = {"s": ball.s, "p": ball.p, "q": ball.q, "radius": ball.radius}
        meta["besov_certificate"] = seminorm
    with open(out / "risk_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")

    lines = [f"experiment {cfg.experiment}: fitted slope of log risk vs {regressor} "
             f"= {slope:.4f} (se {slope_se:.4f}, R^2 {r2:.3f})"]
    if report.forecast is not None:
        fc = report.forecast
        if fc.regime == "supersmooth":
            lines.append(f"forecast ({fc.regime}): risk ~ (ln n*)^(-{fc.log_exponent:.4f})")
            if regressor == "log_log_nstar":
                lines.append(f"slope gap: {slope + fc.log_exponent:+.4f}")
        else:
            lines.append(f"forecast ({fc.regime}): risk ~ (n*)^(-{fc.exponent:.4f}), "
                         f"target slope -{fc.exponent:.4f}")
            lines.append(f"slope gap: {slope + fc.exponent:+.4f}")
    if seminorm is not None:
        lines.append(f"besov certificate: seminorm {seminorm['value']:.4f} "
                     f"(levels {seminorm['j0']}..{seminorm['J']}) vs radius {ball.radius}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text)
    print(text, end="")
    _write_manifest(out, cfg, "bench", seed)
    return 0


def _truth_seminorm(truth, ball) -> dict:
    J = max(4, int(math.ceil(math.log2(max(3 * truth.band, 2)))) + 1)
    spec = MeyerSpec(3, J)
    need = max(
        int(np.abs(scaling_frequency_set(spec, 3).members).max()),
        max(int(np.abs(frequency_set(spec, j).members).max()) for j in spec.detail_levels),
    )
    from .fourier import FourierSeries

    padded = np.zeros(2 * need + 1, dtype=complex)
    padded[need - truth.band: need + truth.band + 1] = truth.values
    coeffs = analyze(FourierSeries(need, padded), spec)
    value = besov_seminorm(coeffs, ball)
    return {"value": value, "j0": 3, "J": J}


def cmd_eigencheck(cfg: RunConfig, seed: int, out: Path, args) -> int:
    models = eigencheck_models(cfg)
    n_list = sorted(int(n) for n in cfg.eigencheck["n_list"])
    if args.dry_run:
        print(f"eigencheck: {len(models)} models x N in {n_list}")
        return 0
    rows = []
    slope_rows = []
    for model in models:
        label = f"{model.kind}(d={model.d:g};scale={model.scale:g})"
        summaries = [toeplitz_eigen_bounds(model, n) for n in n_list]
        for s in summaries:
            rows.append((label, s.n_points, s.lambda_min, s.lambda_max,
                         s.ratio_min, s.ratio_max))
        logn = np.log([s.n_points for s in summaries])
        smax = float(np.polyfit(logn, np.log([s.lambda_max for s in summaries]), 1)[0])
        smin = float(np.polyfit(logn, np.log([s.lambda_min for s in summaries]), 1)[0])
        slope_rows.append((label, smax, smin, 2 * model.d))
    rows.sort(key=lambda r: (r[0], r[1]))
    slope_rows.sort(key=lambda r: r[0])
    header = _header(cfg, "eigencheck", seed)
    _write_table(out / "eigen_scaling.csv", header,
                 ["model", "N", "lambda_min", "lambda_max", "ratio_min", "ratio_max"], rows)
    _write_table(out / "eigen_slopes.csv", header,
                 ["model", "slope_max", "slope_min", "two_d"], slope_rows)
    _write_manifest(out, cfg, "eigencheck", seed)
    for label, smax, smin, twod in slope_rows:
        print(f"{label}: slope(log lambda_max) = {smax:.3f}, "
              f"slope(log lambda_min) = {smin:.3f}, 2d = {twod:.3f}")
    return 0


def cmd_characterize(cfg: RunConfig, seed: int, out: Path, args) -> int:
    design = design_for_n(cfg, int(cfg.design["n"]))
    kernel = build_kernel(cfg)
    section = cfg.characterize or {}
    m_min = int(section.get("m_min", 4))
    m_max = int(section.get("m_max", min(64, design.N // 2 - 1)))
    if args.dry_run:
        print(f"characterize: m range {m_min}..{m_max} on M={design.M} N={design.N}")
        return 0
    fit = characterize_kernel(design, kernel, range(m_min, m_max + 1))
    header = _header(cfg, "characterize", seed)
    _write_table(out / "kernel_fit.csv", header,
                 ["nu", "lambda", "alpha", "beta", "regime",
                  "residual", "residual_regular", "residual_supersmooth"],
                 [(fit.nu, fit.lam, fit.alpha, fit.beta, fit.regime,
                   fit.residual, fit.residual_regular, fit.residual_supersmooth)])
    _write_manifest(out, cfg, "characterize", seed)
    print(f"characterize: regime={fit.regime} nu={fit.nu:.3f} lambda={fit.lam:.3f} "
          f"alpha={fit.alpha:.4g} beta={fit.beta:.2f}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "bench": cmd_bench,
    "eigencheck": cmd_eigencheck,
    "characterize": cmd_characterize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrdeconv",
        description="Multichannel deconvolution with long-range dependent noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the YAML config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the config output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: LRD_DECONV_THREADS or 1)")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan without computing")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    seed = args.seed if args.seed is not None else cfg.seed
    if args.threads is None:
        args.threads = int(os.environ.get("LRD_DECONV_THREADS", "1"))
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 1
    out = Path(args.out if args.out is not None else cfg.output_dir)

    try:
        if not args.dry_run:
            out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, seed, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
