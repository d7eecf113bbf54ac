"""``riseig`` command line entry point."""

import argparse
import logging
import sys
from dataclasses import replace

from ._validation import DomainError
from .experiment_runner import PRESETS, load_config, preset, run_experiment


def build_parser():
    parser = argparse.ArgumentParser(
        prog="riseig",
        description="Reproduce the RIS eigenvalue and sum-rate experiments as CSV files.",
    )
    parser.add_argument("preset", nargs="?", choices=sorted(PRESETS), help="named scenario")
    parser.add_argument("--config", metavar="FILE", help="TOML scenario file instead of a preset")
    parser.add_argument("--seed", type=int, help="base seed (default: preset's)")
    parser.add_argument("--trials", type=int, help="Monte-Carlo trials (1000 for full-scale runs)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if (args.preset is None) == (args.config is None):
        print("riseig: give exactly one of PRESET or --config FILE", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config) if args.config else preset(args.preset)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["n_trials"] = args.trials
        if args.out is not None:
            overrides["output_dir"] = args.out
        config = replace(config, **overrides)
        result = run_experiment(config, threads=args.threads)
    except (DomainError, OSError) as exc:
        print(f"riseig: {exc}", file=sys.stderr)
        return 1
    for path in result.paths:
        print(path)
    failed = sum(result.failures.values())
    if failed:
        print(f"riseig: {failed} trial(s) failed and were excluded", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
