"""Command line entry point.

Exit codes: 0 ok, 2 configuration, 3 gain synthesis, 4 simulation,
5 verification.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis
from .config import RunConfig, load_config, with_values
from .exceptions import (
    ConfigError,
    GainSynthesisError,
    LiftingError,
    SimulationError,
    WindowError,
)
from .gains import FeedbackLaw, cauchy_determinant_check
from .lifting import lyapunov_certificate, reduced_matrix
from .simulate import SimConfig, simulate
from .spectral import eigenvalue, boundary_normal_derivative
from .verify import run_checks

logger = logging.getLogger("fisher_stab")

EXIT_OK, EXIT_CONFIG, EXIT_GAINS, EXIT_SIM, EXIT_VERIFY = 0, 2, 3, 4, 5

TRACE_HEADER = ["t", "l2", "h1", "u_control", "blowup"]
SNAPSHOT_HEADER = ["t", "x", "u"]
SPECTRUM_HEADER = ["j", "lambda", "dphi1"]
GAINS_HEADER = ["name", "i", "j", "value"]
SWEEP_HEADER = ["a", "verdict", "mu_fit", "final_ratio"]
VERIFY_HEADER = ["check", "value", "threshold", "pass"]

FIG_SNAPSHOT_EVERY = 500
FIG4_WINDOWS = (0.0, 0.15, 0.24)

# verify-only hook; tests use it to inject a corrupted GainSet
_gains_hook = None


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def trace_rows(trace):
    last = len(trace) - 1
    for k in range(len(trace)):
        flag = 1 if (trace.blowup_flag and k == last) else 0
        yield trace.times[k], trace.l2[k], trace.h1[k], trace.control[k], flag


def snapshot_rows(snapshots):
    for snap in snapshots:
        for x, u in zip(snap.grid.nodes, snap.values):
            yield snap.time, x, u


def cmd_spectrum(cfg: RunConfig, args) -> int:
    spectral = cfg.spectral
    n = spectral.n_unstable
    rows = [(j, eigenvalue(cfg.alpha, j), boundary_normal_derivative(j)) for j in range(1, n + 4)]
    print(f"alpha={cfg.alpha:g} rho={cfg.rho:g} N={n}")
    print(f"{'j':>3} {'lambda':>14} {'dphi1':>12}")
    for j, lam, d in rows:
        mark = "  unstable" if j <= n else ""
        print(f"{j:>3} {lam:>14.6f} {d:>12.6f}{mark}")
    if n == 0:
        logger.warning("no eigenvalue below rho=%g: the open loop is already stable, no control needed", cfg.rho)
    write_csv(cfg.output_dir() / "spectrum.csv", SPECTRUM_HEADER, rows)
    return EXIT_OK


def cmd_gains(cfg: RunConfig, args) -> int:
    gains = cfg.gains()
    rows = []

    def matrix(name, mat):
        mat = np.atleast_2d(mat)
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                rows.append((name, i + 1, j + 1, mat[i, j]))

    matrix("B0", gains.b0)
    for k, bk in enumerate(gains.bk, 1):
        matrix(f"B{k}", bk)
    matrix("B", gains.b)
    matrix("T", gains.t)
    for i, g in enumerate(FeedbackLaw.from_gains(gains).gain_vector, 1):
        rows.append(("g", i, 0, g))
    numeric, closed = cauchy_determinant_check(gains.gammas, gains.spectral.lambdas)
    cert = lyapunov_certificate(reduced_matrix(gains))
    scalars = {
        "det_sum_bk": gains.det_sum_bk,
        "min_eig_sum_bk": gains.min_eig_sum_bk,
        "cond_sum_bk": gains.cond_b,
        "cauchy_numeric": numeric,
        "cauchy_closed_form": closed,
        "lyapunov_certificate": cert,
    }
    rows.extend((name, 0, 0, v) for name, v in scalars.items())
    out = cfg.output_dir()
    write_csv(out / "gains.csv", GAINS_HEADER, rows)
    report = [
        f"gammas = {', '.join(f'{g:g}' for g in gains.gammas)}",
        f"g = {np.array2string(FeedbackLaw.from_gains(gains).gain_vector, precision=8)}",
        f"B = {np.array2string(gains.b, precision=8)}",
    ] + [f"{k} = {v:.10g}" for k, v in scalars.items()]
    (out / "gains_report.txt").write_text("\n".join(report) + "\n")
    print("\n".join(report))
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    sim = cfg.sim_config(closed_loop=not args.open_loop, linearized=args.linearized)
    res = simulate(sim)
    out = cfg.output_dir()
    write_csv(out / "trace.csv", TRACE_HEADER, trace_rows(res.trace))
    if cfg.snapshot_every > 0:
        write_csv(out / "snapshots.csv", SNAPSHOT_HEADER, snapshot_rows(res.snapshots))
    tr = res.trace
    print(
        f"t_end={tr.times[-1]:g} |u(0)|={tr.l2[0]:.6g} |u(T)|={tr.l2[-1]:.6g} "
        f"blowup={int(tr.blowup_flag)}"
    )
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if args.a_min > args.a_max:
        raise ConfigError(f"--a-min {args.a_min} exceeds --a-max {args.a_max}")
    base = cfg.sim_config(closed_loop=True)
    result = analysis.sweep_window(
        base,
        b=args.b,
        a_range=(args.a_min, args.a_max),
        resolution=args.resolution,
        grid_step=args.grid_step,
        horizon=args.horizon,
    )
    pts = sorted(result.points + result.probes, key=lambda p: p.a)
    write_csv(
        cfg.output_dir() / "sweep.csv",
        SWEEP_HEADER,
        ((p.a, p.verdict, p.mu_fit, p.final_ratio) for p in pts),
    )
    for p in pts:
        print(f"a={p.a:.4f} {p.verdict:<15} mu={p.mu_fit:.4g} ratio={p.final_ratio:.4g}")
    print(f"critical_a={result.critical_a:.4f}")
    if all(p.verdict == analysis.FAILED for p in pts):
        return EXIT_SIM
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    gains = cfg.gains()
    if _gains_hook is not None:
        gains = _gains_hook(gains)
    checks = run_checks(cfg, gains)
    write_csv(
        cfg.output_dir() / "verify.csv",
        VERIFY_HEADER,
        ((c.name, c.value, c.threshold, c.passed) for c in checks),
    )
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (threshold {c.threshold:.3g})")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VERIFY


def _fig_run(cfg: RunConfig, out: Path, name: str, sim: SimConfig):
    res = simulate(sim)
    write_csv(out / f"{name}_trace.csv", TRACE_HEADER, trace_rows(res.trace))
    write_csv(out / f"{name}_snapshots.csv", SNAPSHOT_HEADER, snapshot_rows(res.snapshots))
    return res


def cmd_figures(cfg: RunConfig, args) -> int:
    every = cfg.snapshot_every or FIG_SNAPSHOT_EVERY
    cfg = with_values(cfg, snapshot_every=every)
    out = cfg.output_dir()
    _fig_run(cfg, out, "fig1", cfg.sim_config(closed_loop=False))
    base = cfg.sim_config(closed_loop=True)
    _fig_run(cfg, out, "fig2", base.with_window(0.0, 1.0))
    long = replace(base, t_end=max(cfg.t_end, analysis.SWEEP_HORIZON))
    _fig_run(cfg, out, "fig3a", long.with_window(0.24, 1.0))
    _fig_run(cfg, out, "fig3b", long.with_window(0.25, 1.0))
    rows, fits = [], []
    for a in FIG4_WINDOWS:
        tr = simulate(base.with_window(a, 1.0)).trace
        rows.extend((a, t, v) for t, v in zip(tr.times, tr.h1))
        fit = analysis.fit_decay(tr, norm_kind="h1")
        fits.append((a, fit.mu, fit.r_squared))
        print(f"fig4 a={a:g} mu_H1={fit.mu:.4f} r2={fit.r_squared:.5f}")
    write_csv(out / "fig4_h1.csv", ["a", "t", "h1"], rows)
    write_csv(out / "fig4_fits.csv", ["a", "mu_h1", "r_squared"], fits)
    print(f"wrote figure bundles to {out}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "gains": cmd_gains,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="key = value config file")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="fisher-stab", description="Boundary feedback stabilization of Fisher's equation"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues and unstable cutoff")
    sub.add_parser("gains", parents=[common], help="assemble the feedback gains")
    p = sub.add_parser("simulate", parents=[common], help="run the PDE")
    loop = p.add_mutually_exclusive_group()
    loop.add_argument("--open-loop", action="store_true")
    loop.add_argument("--closed-loop", action="store_true")
    p.add_argument("--linearized", action="store_true", help="drop the quadratic term")
    p = sub.add_parser("sweep", parents=[common], help="observation-window sweep")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a-min", type=float, default=0.0)
    p.add_argument("--a-max", type=float, default=0.35)
    p.add_argument("--resolution", type=float, default=0.01)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--horizon", type=float, default=analysis.SWEEP_HORIZON)
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    sub.add_parser("figures", parents=[common], help="write plot-ready CSVs for figures 1-4")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, args.set)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, WindowError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GainSynthesisError as exc:
        print(f"gain synthesis error: {exc}", file=sys.stderr)
        return EXIT_GAINS
    except (SimulationError, LiftingError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
