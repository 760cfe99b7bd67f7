"""Command-line entry point for the benchmark experiments."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    DEFAULT_DELTA_GRID,
    DEFAULT_K_VALUES,
    DEFAULT_MU_VALUES,
    ExperimentSpec,
    run_experiment,
)
from .scene import SystemConfig

_KIND_BY_COMMAND = {
    "convergence": "convergence",
    "tradeoff": "tradeoff",
    "usersweep": "user_sweep",
    "fairness": "fairness_table",
    "timing": "timing",
}


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbeam",
        description="Max-min fairness beamforming benchmarks (CSV + plot scripts).",
        epilog="Set FAIRBEAM_WORKERS=<n> to parallelize over channel realizations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _KIND_BY_COMMAND:
        p = sub.add_parser(command, help=f"run the {command} experiment")
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--realizations", type=int, help="number of channel realizations")
        p.add_argument(
            "--solver",
            choices=("smooth", "fp", "both"),
            default="both",
            help="which solver(s) to run",
        )
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        if command == "convergence":
            p.add_argument("--mu", type=_floats, default=DEFAULT_MU_VALUES,
                           help="comma-separated smoothing parameters")
        if command in ("tradeoff", "usersweep"):
            p.add_argument("--delta", type=_floats, default=None,
                           help="comma-separated tradeoff weights")
        if command in ("usersweep", "timing"):
            p.add_argument("--users", type=_ints, default=DEFAULT_K_VALUES,
                           help="comma-separated user counts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = SystemConfig.from_file(args.config) if args.config else SystemConfig()
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        kind = _KIND_BY_COMMAND[args.command]
        spec_kwargs = {
            "kind": kind,
            "config": config,
            "solvers": args.solver,
            "out_dir": args.out,
        }
        if args.realizations is not None:
            spec_kwargs["n_realizations"] = args.realizations
        if getattr(args, "mu", None) is not None:
            spec_kwargs["mu_values"] = args.mu
        delta = getattr(args, "delta", None)
        if delta is not None:
            spec_kwargs["delta_values"] = delta
        elif kind == "tradeoff":
            spec_kwargs["delta_values"] = DEFAULT_DELTA_GRID
        elif kind == "user_sweep":
            spec_kwargs["delta_values"] = (0.0, 1.0)
        if getattr(args, "users", None) is not None:
            spec_kwargs["k_values"] = args.users
        written = run_experiment(ExperimentSpec(**spec_kwargs))
    except Exception as exc:  # surfaced with context, nonzero exit
        print(f"fairbeam: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
