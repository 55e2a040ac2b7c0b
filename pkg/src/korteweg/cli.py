"""Command-line interface: ``korteweg {stability,dispersion,simulate,besov,check}``.

Exit codes: 0 success, 1 negative analysis result (unstable coefficients,
failed check), 2 usage or input error, 3 numerical blow-up.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .besov import HybridIndex
from .checks import SUITES, run_suite
from .config import load_config
from .dyadic import DyadicDecomposition, block_norms
from .errors import KortewegError, SolverError
from .linear import (
    LinearCoeffs,
    classify_stability,
    eigenvalues,
    from_equilibrium,
    high_freq_limits,
    low_freq_asymptotics,
)
from .output import csv_text, dumps
from .spectral import SpectralField, read_kwf, set_threads, write_kwf

log = logging.getLogger("korteweg")

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
DISPERSION_HEADER = ["xi", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2", "re_lambda3", "im_lambda3"]
COEFF_FLAGS = ("nu", "eps", "alpha", "beta", "gamma", "delta")


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("KORTEWEG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run or model configuration")
    common.add_argument("--out", type=Path, help="output directory (created if missing)")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1, help="FFT worker threads (default: all cores)")
    common.add_argument("--seed", type=_u64, help="override the configured seed")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    coeffs = argparse.ArgumentParser(add_help=False)
    for name in COEFF_FLAGS:
        coeffs.add_argument(f"--{name}", type=float)
    coeffs.add_argument("--mu-tilde", type=float, dest="mu_tilde", help="shear part of nu (default nu/2)")

    p = argparse.ArgumentParser(prog="korteweg", description="Spectral analysis of Navier-Stokes-Korteweg flows with heat conduction.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("stability", parents=[common, coeffs], help="classify linear stability")

    d = sub.add_parser("dispersion", parents=[common, coeffs], help="eigenvalues of the linear operator against xi")
    d.add_argument("--xi-min", type=float, default=1e-3)
    d.add_argument("--xi-max", type=float, default=1e3)
    d.add_argument("--points", type=_positive_int, default=61)
    d.add_argument("--spacing", choices=("log", "linear"), default="log")
    d.add_argument("--plot", action="store_true", help="also write dispersion.png into --out")

    s = sub.add_parser("simulate", parents=[common], help="run the nonlinear solver from a configuration")
    s.add_argument("--no-plot", action="store_true", help="skip the diagnostics figure")

    b = sub.add_parser("besov", parents=[common], help="Besov and hybrid norms of a KWF1 field")
    b.add_argument("field", type=Path)
    b.add_argument("--s", type=float, required=True)
    b.add_argument("--t", type=float, help="high-frequency index (default: s)")
    b.add_argument("--split", type=int, default=0)
    b.add_argument("--component", type=int, default=0)

    c = sub.add_parser("check", parents=[common], help="run an inequality harness")
    c.add_argument("suite", choices=SUITES + ("all",))
    return p


def _coeffs_from_args(args) -> tuple[LinearCoeffs, dict | None]:
    given = {n: getattr(args, n) for n in COEFF_FLAGS if getattr(args, n) is not None}
    if given and args.config is not None:
        raise UsageError("pass either coefficient flags or --config, not both")
    if args.config is not None:
        model = load_config(args.config).model
        return from_equilibrium(model), model.to_dict()
    missing = [n for n in COEFF_FLAGS if n not in given]
    if missing:
        raise UsageError("missing coefficients: " + ", ".join(f"--{m}" for m in missing))
    return LinearCoeffs.from_tuple(*(given[n] for n in COEFF_FLAGS), mu_tilde=args.mu_tilde), None


def _emit(text: str, out_dir: Path | None, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    sys.stdout.write(str(out_dir / name) + "\n")


def _complex_list(values) -> list:
    return [{"re": float(v.real), "im": float(v.imag)} for v in values]


def cmd_stability(args) -> int:
    c, model = _coeffs_from_args(args)
    rep = classify_stability(c)
    payload = {"coeffs": c.to_dict(), **rep.to_dict()}
    if model is not None:
        payload["model"] = model
    try:
        payload["low_frequency"] = low_freq_asymptotics(c).to_dict()
    except KortewegError:
        payload["low_frequency"] = None
    try:
        payload["high_frequency_limits"] = _complex_list(high_freq_limits(c))
    except KortewegError:
        payload["high_frequency_limits"] = None
    if args.format == "csv":
        rows = [[k, float(v), "yes" if v >= 0 else "no"] for k, v in rep.values.items()]
        text = csv_text(["condition", "value", "satisfied"], rows)
        _emit(text, args.out, "stability.csv")
    else:
        _emit(dumps(payload), args.out, "stability.json")
    return EXIT_OK if rep.stable else EXIT_NEGATIVE


def dispersion_table(c: LinearCoeffs, xi: np.ndarray) -> np.ndarray:
    return np.array([eigenvalues(c, x) for x in xi])


def cmd_dispersion(args) -> int:
    c, _ = _coeffs_from_args(args)
    if not (0 < args.xi_min <= args.xi_max):
        raise UsageError("need 0 < xi-min <= xi-max")
    if args.points == 1:
        xi = np.array([args.xi_min])
    elif args.spacing == "log":
        xi = np.logspace(np.log10(args.xi_min), np.log10(args.xi_max), args.points)
    else:
        xi = np.linspace(args.xi_min, args.xi_max, args.points)
    eig = dispersion_table(c, xi)
    if args.format == "json":
        text = dumps({"coeffs": c.to_dict(), "xi": xi.tolist(), "eigenvalues": [_complex_list(e) for e in eig]})
        _emit(text, args.out, "dispersion.json")
    else:
        rows = [[float(x)] + [float(v) for e in row for v in (e.real, e.imag)] for x, row in zip(xi, eig)]
        _emit(csv_text(DISPERSION_HEADER, rows), args.out, "dispersion.csv")
    if args.plot:
        if args.out is None:
            raise UsageError("--plot needs --out")
        from .plotting import plot_dispersion

        plot_dispersion(xi, eig, args.out / "dispersion.png")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .solver import simulate

    if args.config is None:
        raise UsageError("simulate needs --config")
    cfg = load_config(args.config, seed_override=args.seed)
    state = cfg.initial_state()
    traj = simulate(state, cfg.model, cfg.solver, cfg.norms)
    labels = [n.label for n in cfg.norms]
    header = ["t", "energy", "dissipation"] + labels
    rows = [[float(t), d["energy"], d["dissipation"]] + [d["norms"][lab] for lab in labels] for t, d in zip(traj.times, traj.diagnostics)]
    csv_out = csv_text(header, rows)
    if args.out is None:
        sys.stdout.write(csv_out)
        return EXIT_OK
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "diagnostics.csv").write_text(csv_out)
    snaps = []
    for i, st in enumerate(traj.states):
        name = f"snapshot_{i:05d}.kwf"
        write_kwf(out / name, cfg.grid, st.components())
        snaps.append(name)
    manifest = {
        "times": [float(t) for t in traj.times],
        "config": cfg.raw,
        "seed": cfg.seed,
        "model": cfg.model.to_dict(),
        "coeffs": from_equilibrium(cfg.model).to_dict(),
        "snapshots": snaps,
        "components": ["q"] + [f"u{j + 1}" for j in range(cfg.grid.dim)] + ["T"],
        "diagnostics": [{"t": float(t), **d} for t, d in zip(traj.times, traj.diagnostics)],
    }
    (out / "manifest.json").write_text(dumps(manifest))
    if not args.no_plot:
        from .plotting import plot_diagnostics

        plot_diagnostics(traj.times, traj.diagnostics, out / "diagnostics.png")
    sys.stdout.write(str(out / "manifest.json") + "\n")
    return EXIT_OK


def cmd_besov(args) -> int:
    grid, data = read_kwf(args.field)
    if not 0 <= args.component < data.shape[0]:
        raise UsageError(f"component {args.component} not in file with {data.shape[0]} components")
    u = SpectralField.from_real(grid, data[args.component])
    dec = DyadicDecomposition.from_grid(grid)
    t = args.s if args.t is None else args.t
    norms = block_norms(u, dec)
    wb = 2.0 ** (dec.levels.astype(float) * args.s)
    wh = HybridIndex(args.s, t, args.split).weights(dec.levels)
    blocks = [
        {"level": int(l), "l2": float(n), "besov_weight": float(a), "hybrid_weight": float(b)}
        for l, n, a, b in zip(dec.levels, norms, wb, wh)
    ]
    payload = {
        "file": str(args.field),
        "component": args.component,
        "s": args.s,
        "t": t,
        "split": args.split,
        "besov": float(np.sum(wb * norms)),
        "hybrid": float(np.sum(wh * norms)),
        "blocks": blocks,
    }
    if args.format == "csv":
        rows = [[b["level"], b["l2"], b["besov_weight"], b["hybrid_weight"]] for b in blocks]
        _emit(csv_text(["level", "l2", "besov_weight", "hybrid_weight"], rows), args.out, "besov.csv")
    else:
        _emit(dumps(payload), args.out, "besov.json")
    return EXIT_OK


def cmd_check(args) -> int:
    seed = 0 if args.seed is None else args.seed
    results = run_suite(args.suite, seed)
    passed = all(r["passed"] for r in results)
    payload = {"suite": args.suite, "seed": seed, "passed": passed, "results": results}
    if args.format == "csv":
        rows = [[r["suite"], "pass" if r["passed"] else "fail"] for r in results]
        _emit(csv_text(["suite", "result"], rows), args.out, "check.csv")
    else:
        _emit(dumps(payload), args.out, "check.json")
    return EXIT_OK if passed else EXIT_NEGATIVE


COMMANDS = {
    "stability": cmd_stability,
    "dispersion": cmd_dispersion,
    "simulate": cmd_simulate,
    "besov": cmd_besov,
    "check": cmd_check,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    set_threads(args.threads)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"korteweg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        sys.stdout.write(dumps({"error": "blowup", "step": exc.step, "time": exc.time, "message": str(exc)}))
        return EXIT_BLOWUP
    except KortewegError as exc:
        print(f"korteweg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
