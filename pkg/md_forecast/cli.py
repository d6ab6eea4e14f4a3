"""md-forecast command line.

Parses subcommands, configures logging from MDF_* settings and runs the
handler inside the error-handling and timing middleware chain.
"""

import argparse
import logging
import sys
from collections.abc import Sequence

import torch

from md_forecast.commands import HANDLERS
from md_forecast.config import BLOCKS, Settings, block_keys
from md_forecast.dependencies import Dependencies
from md_forecast.middleware import (
    CommandContext,
    ErrorHandlingMiddleware,
    TimingMiddleware,
    run_with_middleware,
)
from md_forecast.utils.console import CommandFormatter

logger = logging.getLogger(__name__)


def _configure_logging(settings: Settings) -> None:
    """Attach the colorful stderr handler to the md_forecast logger."""
    use_colors = settings.log_colors and sys.stderr.isatty()

    package_logger = logging.getLogger("md_forecast")
    package_logger.setLevel(getattr(logging, settings.log_level, logging.INFO))
    if not package_logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(CommandFormatter(use_colors=use_colors))
        package_logger.addHandler(handler)
        package_logger.propagate = False

    for noisy_logger in ("asyncio", "torch", "matplotlib"):
        logging.getLogger(noisy_logger).setLevel(logging.WARNING)


def _config_epilog() -> str:
    lines = ["config keys (TOML blocks, or --set block.key=value):"]
    lines.append("  seed, out_dir, run_id")
    for block in BLOCKS:
        lines.append(f"  [{block}] " + ", ".join(block_keys(block)))
    lines.append("")
    lines.append("exit codes: 0 ok, 1 config/input error, 2 runtime failure, 3 partial failure")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="md-forecast",
        description="Physics-informed forecasting of molecular dynamics trajectories.",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="BLOCK.KEY=VALUE",
        help="override one config value (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("gen-data", help="simulate and split a reference trajectory")

    fit = sub.add_parser("fit-morse", help="fit Morse parameters to energy samples")
    fit.add_argument("energy_csv", help="CSV with species_i,species_j,d,energy columns")
    fit.add_argument(
        "--synthesize",
        action="store_true",
        help="first write samples drawn from the configured Morse table",
    )
    fit.add_argument("--output", help="output CSV (default: <run>/morse_params.csv)")

    thresholds = sub.add_parser("thresholds", help="compute energy thresholds")
    thresholds.add_argument("trajectory")
    thresholds.add_argument("morse_csv")
    thresholds.add_argument("--source", help="label stored with the table")
    thresholds.add_argument("--output", help="output CSV (default: <run>/thresholds.csv)")

    train = sub.add_parser("train", help="train a forecaster")
    train.add_argument("--train", help="train trajectory (default: <run>/train.<fmt>)")
    train.add_argument("--valid", help="valid trajectory (default: <run>/valid.<fmt>)")

    roll = sub.add_parser("rollout", help="autoregressive rollout from a checkpoint")
    roll.add_argument("checkpoint")
    roll.add_argument("--seed-traj", help="trajectory whose first H frames seed the rollout")
    roll.add_argument("--thresholds", help="threshold CSV for the guard")
    roll.add_argument("--no-pii", action="store_true", help="disable the inference guard")

    evaluate = sub.add_parser("evaluate", help="score a predicted trajectory")
    evaluate.add_argument("pred")
    evaluate.add_argument("truth")
    evaluate.add_argument(
        "--skip",
        dest="history",
        type=int,
        default=None,
        help="leading seed frames excluded from scoring (default: H)",
    )
    evaluate.add_argument("--thresholds", help="threshold CSV for V_r")

    sub.add_parser("ablate", help="2x2 grid over training and inference guards")
    sub.add_parser("sweep-lambda", help="retrain and score over eval.lambdas")

    diff = sub.add_parser("diffusivity", help="MSD and diffusion coefficients")
    diff.add_argument("trajectory")
    diff.add_argument("--species", help="single species (default: each species)")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = Settings.from_env()
    _configure_logging(settings)
    torch.set_num_threads(settings.torch_threads)

    def run(context: CommandContext) -> int:
        deps = Dependencies.create(args.config, args.overrides)
        logger.debug("Running %s with seed=%d", context.command, deps.config.seed)
        return HANDLERS[context.command](deps, args)

    middlewares = [
        ErrorHandlingMiddleware(include_traceback=settings.include_traceback),
        TimingMiddleware(slow_threshold_ms=settings.slow_threshold_ms),
    ]
    context = CommandContext(command=args.command, options=vars(args))
    return run_with_middleware(middlewares, context, run)


if __name__ == "__main__":
    sys.exit(main())
