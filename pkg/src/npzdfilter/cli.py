"""Command-line interface.

Subcommands
-----------
simulate   prior predictive ensemble over the forcing span
twin       synthetic-truth experiment: generate, assimilate, summarize
infer      assimilate an observation CSV
forecast   continue a finished run's posterior draws beyond the data
summarize  recompute quantiles from a stored trajectory directory

Exit codes: 0 success, 2 configuration error, 3 data error,
4 inference failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import ExperimentConfig
from .errors import (ConfigError, DataError, DomainError, FilterCollapseError,
                     InferenceStartupError, IntegrationError)
from .experiments import (QuantileSummary, run_forecast, run_infer,
                          run_simulate, run_twin, summarize_draws)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFERENCE = 4


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--forcing", help="forcing CSV (default: synthetic climatology)")
    p.add_argument("--obs", help="observations CSV")
    p.add_argument("--particles", type=int, help="particle count")
    p.add_argument("--iterations", type=int, help="chain length")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads for ensembles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npzdfilter", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "twin", "infer", "forecast"):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "forecast":
            p.add_argument("--run", help="directory of the finished twin/infer run")
            p.add_argument("--days", type=int, help="forecast length in days")
    p = sub.add_parser("summarize")
    p.add_argument("trajectories", help="stored trajectory directory")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json_file(args.config) if args.config \
        else ExperimentConfig()
    overrides = {"mode": args.command}
    if args.forcing is not None:
        overrides["forcing_csv"] = args.forcing
    if args.obs is not None:
        overrides["obs_csv"] = args.obs
    if args.particles is not None:
        overrides["particles"] = args.particles
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.command == "forecast":
        if getattr(args, "run", None) is not None:
            overrides["run_dir"] = args.run
        if getattr(args, "days", None) is not None:
            overrides["forecast_days"] = args.days
    return dataclasses.replace(cfg, **overrides)


def _progress(every=500):
    def cb(it, accepted, ln_z, theta):
        if (it + 1) % every == 0:
            print(f"iteration {it + 1}: ln_evidence={ln_z:.3f}", file=sys.stderr)
    return cb


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "summarize":
            summary = summarize_draws(args.trajectories)
            import os
            os.makedirs(args.out, exist_ok=True)
            summary.to_csv(os.path.join(args.out, "state_quantiles.csv"))
            return EXIT_OK
        cfg = load_config(args)
        if args.command == "simulate":
            run_simulate(cfg)
        elif args.command == "twin":
            run_twin(cfg, on_iteration=_progress())
        elif args.command == "infer":
            run_infer(cfg, on_iteration=_progress())
        elif args.command == "forecast":
            run_forecast(cfg)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InferenceStartupError, FilterCollapseError, IntegrationError) as exc:
        print(f"inference failure: {exc}", file=sys.stderr)
        return EXIT_INFERENCE


if __name__ == "__main__":
    sys.exit(main())
