"""``pulse-recover`` command line.

Usage: ``pulse-recover <subcommand> [--config FILE.json] [--seed S] [--out DIR] ...``

Every flag overrides the matching config field.  Exit status is 0 on
success, 2 on a configuration error and 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, SolverFailure, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _parse_list(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"expected a JSON list, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with status 2 on bad usage, which matches EXIT_CONFIG
    p = argparse.ArgumentParser(prog="pulse-recover",
                                description="Sparse pulse-stream recovery experiments.")
    p.add_argument("subcommand", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--kernel", choices=("gaussian", "cauchy"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--trials", dest="trials_per_point", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--delta", type=float, help="l1 noise budget")
    p.add_argument("--threshold", type=float, help="absolute support threshold")
    p.add_argument("--signal", help="signal CSV (k,t,y) for recover")
    p.add_argument("--truth", help="true spikes CSV (t,c) for recover metrics")
    p.add_argument("--bound", action="store_true", default=None,
                   help="add the worst-case error bound to the recover report")
    p.add_argument("--support", type=_parse_list, help="JSON list of spike positions (certify)")
    p.add_argument("--signs", type=_parse_list, help="JSON list of +1/-1 signs (certify)")
    p.add_argument("--workers", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config")}
    overrides["experiment"] = args.subcommand
    try:
        if args.config:
            cfg = ExperimentConfig.from_json(args.config, **overrides)
        else:
            cfg = ExperimentConfig.from_dict({}, **overrides)
        run_experiment(cfg)
    except ConfigError as exc:
        print(f"pulse-recover: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"pulse-recover: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"pulse-recover: {args.subcommand} finished; outputs in {cfg.out_dir()}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
