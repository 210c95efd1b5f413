"""Command-line entry point: ``blowup-lab {run,sweep,oracle,check}``.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 no blow-up
detected while the config requires blow-up analysis.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import io as lab_io
from .config import ConfigError, load_config
from .model import ode_exact, ode_steady_theta
from .pipeline import SWEEP_COLUMNS, convergence_ladder, output_root, run_experiment, sweep
from .solver import InsufficientGrowth, StepRejected

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NO_BLOWUP = 0, 1, 2, 3

NUMERICAL_ERRORS = (StepRejected, InsufficientGrowth, FloatingPointError, OverflowError,
                    ArithmeticError)


def _resolve(directory) -> Path:
    path = Path(directory)
    return path if path.is_absolute() else output_root() / path


def _load(path):
    try:
        return load_config(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"{path}: no such file") from exc


def cmd_run(args) -> int:
    cfg = _load(args.config)
    out_dir = _resolve(args.out or cfg.outputs.directory)
    try:
        res = run_experiment(cfg, out_dir)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summ = res.summary
    print(f"status: {summ['status']}  T_est: {summ['T_est']}  output: {out_dir}")
    if not res.detected and cfg.outputs.require_blowup:
        return EXIT_NO_BLOWUP
    return EXIT_OK


def cmd_sweep(args) -> int:
    configs = sorted(Path(args.directory).glob("*.ini"))
    out_root = _resolve(args.out or "sweep")
    out_root.mkdir(parents=True, exist_ok=True)
    rows = sweep(configs, out_root, workers=args.workers)
    lab_io.write_csv(out_root / "sweep.csv", SWEEP_COLUMNS,
                     ([r[c] for c in SWEEP_COLUMNS] for r in rows))
    for r in rows:
        print(f"{r['name']}: {r['status']}" + (f" ({r['error']})" if r["error"] else ""))
    return EXIT_OK


def cmd_oracle(args) -> int:
    beta = 1.0 / (args.p - 1.0)
    data = {
        "p": args.p, "T": args.T, "beta": beta,
        "u_t": "(beta/(T-t))^beta",
        "theta_fixed_point": ode_steady_theta(args.p),
    }
    if args.t is not None:
        data["t"] = args.t
        data["u_t_at_t"] = ode_exact(args.p, args.T, args.t)
    print(json.dumps(data, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load(args.config)
    try:
        report = convergence_ladder(cfg, levels=args.levels)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out_dir = _resolve(args.out or cfg.outputs.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    lab_io.write_json(out_dir / "convergence.json", report)
    for row in report["levels"]:
        orders = {k: v for k, v in row.items() if k.startswith("order_")}
        print(f"nx={row['nx']} ds={row['ds']:g} residual_1_7={row['residual_1_7']:.3e} "
              f"dissipation={row['dissipation_residual']:.3e} "
              + " ".join(f"{k}={v:.2f}" for k, v in orders.items() if math.isfinite(v)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blowup-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="pilot + main run + analysis for one config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (relative paths go under $BLOWUP_LAB_OUT)")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run every *.ini in a directory and write sweep.csv")
    sw.add_argument("directory")
    sw.add_argument("--out")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="closed-form reference values")
    orc_sub = orc.add_subparsers(dest="kind", required=True)
    ode = orc_sub.add_parser("ode", help="spatially flat solution u_t = (beta/(T-t))^beta")
    ode.add_argument("--p", type=float, required=True)
    ode.add_argument("--T", type=float, required=True)
    ode.add_argument("--t", type=float)
    ode.set_defaults(func=cmd_oracle)

    chk = sub.add_parser("check", help="verification harnesses")
    chk_sub = chk.add_subparsers(dest="kind", required=True)
    conv = chk_sub.add_parser("convergence", help="refinement ladder over (dx, ds)")
    conv.add_argument("config")
    conv.add_argument("--levels", type=int, default=3)
    conv.add_argument("--out")
    conv.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle" and args.p <= 1.0:
        print("config error: p > 1 required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
