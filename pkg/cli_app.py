"""
Command-line entry point.

    python cli_app.py <task> --config <path> [--seed N] [--trials N] [--out DIR]
                      [--log-level LEVEL] [--emit-plot-data]

Tasks: tukey, linfeas, learn-halfspace, ip-bench, approx-check, audit-acml, audit, generate, predict.

Exit codes: 0 completed, 1 internal error, 2 input error, 3 insufficient samples in every trial.
"""
import argparse
import sys
from typing import get_args

from pydantic import ValidationError

from entities.experiment import Task
from services.experiments import EXIT_INPUT, EXIT_INTERNAL, load_experiment, run_experiment
from utils.config import ConfigLoader
from utils.decorators import log_and_return_default
from utils.errors import InputError, ParameterError, UnsupportedDimensionError
from utils.logger import LoggerFactory

logger = LoggerFactory.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpopt", description="Private optimisation of approximated quasi-concave functions.")
    parser.add_argument("task", choices=get_args(Task), help="Task to run.")
    parser.add_argument("--config", default=None, help="JSON configuration (default: $DPOPT_CONFIG_PATH or config.json).")
    parser.add_argument("--seed", type=int, default=None, help="Override the configured seed.")
    parser.add_argument("--trials", type=int, default=None, help="Override the number of trials.")
    parser.add_argument("--out", dest="output_dir", default=None, help="Override the output directory.")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR or CRITICAL.")
    parser.add_argument("--emit-plot-data", action="store_true", default=None,
                        help="Also write tidy long-format CSV for plotting.")
    return parser


@log_and_return_default(EXIT_INTERNAL, message="Experiment failed with an internal error")
def _execute(args: argparse.Namespace) -> int:
    try:
        config = load_experiment(args.config, {"task": args.task, "seed": args.seed, "trials": args.trials,
                                               "output_dir": args.output_dir, "emit_plot_data": args.emit_plot_data})
        return run_experiment(config)
    except (InputError, ParameterError, UnsupportedDimensionError, ValidationError) as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        try:
            LoggerFactory.update_all_levels(args.log_level)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return _execute(args)
    finally:
        ConfigLoader.reset()


if __name__ == "__main__":
    sys.exit(main())
