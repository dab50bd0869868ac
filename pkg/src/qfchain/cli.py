"""Command-line front end: ``qfchain run|validate-config|cp-check``."""
from __future__ import annotations

import argparse
import json
import sys

from . import quasifree as qf
from .fock import DimensionBudgetError, InvariantBreach
from .scenario import (
    EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, MODES,
    ConfigError, RuntimeInvariantError, load_config, parse_config, read_config_json, run_scenario,
)


def _load(path: str, mode: str | None = None, seed: int | None = None, tol: float | None = None):
    raw = read_config_json(path)
    if isinstance(raw, dict):
        if seed is not None:
            raw["seed"] = seed
        if mode is not None:
            raw["mode"] = mode
    cfg = parse_config(raw)
    if tol is not None:
        cfg.tolerances["tol_char"] = tol
    return cfg


def _report_config_error(exc: ConfigError) -> int:
    print("config error:", file=sys.stderr)
    for problem in exc.problems:
        print(f"  - {problem}", file=sys.stderr)
    return EXIT_CONFIG


def cmd_run(args) -> int:
    try:
        cfg = _load(args.config, args.mode, args.seed, args.tol)
    except ConfigError as exc:
        return _report_config_error(exc)
    try:
        summary = run_scenario(cfg, args.out)
    except (RuntimeInvariantError, InvariantBreach) as exc:
        print(f"runtime invariant breach: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except DimensionBudgetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {summary['n_records']} records to {args.out}")
    if cfg.mode == "cross_validate":
        cv = summary["cross_validation"]
        print(f"cross-validation {cv['verdict']}: max deviation {cv['max_char_deviation']:.3e}, "
              f"tail mass {cv['max_tail_mass']:.3e}")
        if cv["verdict"] != "pass":
            return EXIT_VALIDATION
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _report_config_error(exc)
    print(f"config ok: mode={cfg.mode}, N={cfg.params.N}, {len(cfg.probes)} probes")
    return EXIT_OK


def cmd_cp_check(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        return _report_config_error(exc)
    composite = qf.repeated_interaction_map(cfg.params, cfg.t_max)
    cert = qf.cp_certificate(composite, cfg.tol("tol_sv"))
    print(json.dumps(cert.as_dict(), indent=2))
    return EXIT_OK if cert.is_cp else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qfchain", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trajectory.csv + summary.json")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--seed", type=int)
    run.add_argument("--tol", type=float, help="cross-validation tolerance on characteristic functions")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate-config", help="check a config file and report every problem")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)

    cp = sub.add_parser("cp-check", help="print the CP certificate of the composite map at t_max")
    cp.add_argument("--config", required=True)
    cp.set_defaults(func=cmd_cp_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
