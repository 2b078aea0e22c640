"""CLI entry point and argument parsing.

Loads the configuration, applies flag overrides and dispatches to the run or
sweep workflow.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import MODES, SLEEP_POLICIES, SWEEPABLE, ConfigError, SimConfig, load_config, with_overrides
from .ui import print_comparison, print_header, print_summary
from .workflow import EXIT_CONFIG, EXIT_OK, run_workflow, sweep_configs, sweep_label, sweep_workflow


LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def get_run_command() -> str:
    """Returns appropriate CLI command for frozen exe vs script mode."""
    if getattr(sys, 'frozen', False):
        return "./crn_sim"
    return "python crn_sim.py"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Cognitive-radio sensor network simulator",
        epilog=f"Example: {get_run_command()} run --config sim.txt --out results",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file (defaults if omitted)")
    common.add_argument("--out", type=Path, default=Path("results"), help="Output directory")
    common.add_argument("--seed", type=int, help="Override the random seed")
    common.add_argument("--rounds", type=int, help="Override the number of rounds")
    common.add_argument("--mode", choices=MODES, help="Sensing architecture")
    common.add_argument("--sleep", choices=SLEEP_POLICIES, help="Sleep policy (cusf mode only)")
    common.add_argument("--verbose", action="store_true", help="Enable verbose logging")

    subparsers.add_parser("run", parents=[common], help="Run one simulation")
    sweep = subparsers.add_parser("sweep", parents=[common], help="Run one simulation per parameter value")
    sweep.add_argument("--param", required=True, help=f"Parameter to vary: {', '.join(SWEEPABLE)}")
    sweep.add_argument("--values", required=True, help="Comma-separated values, e.g. 5,10,15,20")
    sweep.add_argument("--jobs", type=int, default=1, help="Parallel sub-runs")
    return parser


def resolve_config(args: argparse.Namespace) -> SimConfig:
    config = load_config(args.config) if args.config else load_config("")
    overrides = {key: getattr(args, key) for key in ("seed", "rounds", "mode", "sleep")
                 if getattr(args, key) is not None}
    return with_overrides(config, **overrides) if overrides else config


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, load config, and run the requested workflow."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags; --help exits 0
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=log_level, format=LOG_FORMAT)

    try:
        config = resolve_config(args)
    except ConfigError as e:
        logging.error(f"Invalid configuration: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        print_header("CRN SENSOR NETWORK SIMULATION")
        status, summary = run_workflow(config, args.out)
        if summary is not None:
            print_summary(summary)
            print(f"\nResults written to {args.out}\n")
        return status

    values = [v.strip() for v in args.values.split(",") if v.strip()]
    print_header(f"SWEEP: {args.param}")
    status, summaries = sweep_workflow(config, args.param, values, args.out, jobs=max(1, args.jobs))
    if status == EXIT_OK:
        labels = [sweep_label(args.param, c) for c in sweep_configs(config, args.param, values)]
        print_comparison(args.param, labels, summaries)
        print(f"\nResults written to {args.out}\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
