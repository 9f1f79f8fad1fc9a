"""Command-line experiment driver.

Subcommands:
    run       optimize the configured surfaces, sweep every pipeline,
              write CSVs, persisted surfaces, and a plot script
    validate  check a config without running; prints a JSON report
    optimize  optimize and persist the da-sis surfaces only
    sweep     re-sweep a persisted surface configuration
    baseline  sweep only the digital benchmark pipelines

Common flags: --config, --seed, --out-dir, --threads, --snr-def.
"""

from __future__ import annotations

import argparse
import json
import sys

from .equalizers import UnstableChannelError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    load_experiment_config,
    run_experiment,
    validate_config,
)
from .surface import GuardBudgetError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config JSON (defaults when omitted)")
    parser.add_argument("--seed", type=int, help="override the root seed")
    parser.add_argument("--out-dir", help="override the output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument(
        "--snr-def",
        choices=("received", "transmit"),
        help="override the SNR definition",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dasis", description="Wave-domain equalizer experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "full experiment: optimize, sweep, plot script"),
        ("validate", "validate a config file"),
        ("optimize", "optimize and persist surfaces only"),
        ("sweep", "sweep an existing persisted surface"),
        ("baseline", "sweep digital baselines only"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--surface", required=True, help="persisted surface JSON")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = load_experiment_config(args.config)
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.out_dir is not None:
        config.out_dir = args.out_dir
    if args.snr_def is not None:
        config.snr_def = args.snr_def
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.command == "validate":
        report = validate_config(config)
        print(json.dumps(report, indent=2))
        return 0 if all(r["ok"] for r in report) else 1

    mode = {"run": "all", "optimize": "optimize", "baseline": "baseline", "sweep": "sweep"}[
        args.command
    ]
    try:
        artifacts = run_experiment(
            config,
            threads=args.threads,
            only=mode,
            surface_path=getattr(args, "surface", None),
        )
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (UnstableChannelError, GuardBudgetError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
