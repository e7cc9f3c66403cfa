from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, NoReturn, Optional, Sequence

from .config import parse_config
from .exceptions import FedECLError, UsageError
from .services.experiment_service import ExperimentService
from .utils.logging import get_logger, setup_logging

logger = get_logger("main")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ``UsageError`` instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _lambda_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"--lambda-sweep expects comma-separated numbers, got '{text}'") from None
    for value in values:
        if not 0.0 <= value <= 1.0:
            raise UsageError(f"--lambda-sweep value out of range [0, 1]: {value}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML experiment file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one config key (repeatable)",
    )

    parser = _Parser(prog="fedecl", description="Expert collaborative learning simulator")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    commands.add_parser("partition", parents=[common], help="long-tail shaping and Dirichlet partition only")
    commands.add_parser("train", parents=[common], help="Phase I + Phase II, write checkpoints")

    evaluate = commands.add_parser("eval", parents=[common], help="evaluate checkpoints and baselines")
    evaluate.add_argument("--checkpoints", type=Path, default=None, help="checkpoint directory")
    evaluate.add_argument("--lambda-sweep", dest="lambda_sweep", default=None, help="e.g. 0,0.5,1")
    evaluate.add_argument("--in-process", action="store_true", help="train and evaluate without checkpoints")

    report = commands.add_parser("report", parents=[common], help="merge metrics files of several runs")
    report.add_argument("metrics", nargs="+", type=Path, help="metrics.csv files")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    config = parse_config(args.config, args.overrides)
    service = ExperimentService(config)
    logger.info(f"Running '{args.command}' with master seed {config.seed} into {config.output_dir}")

    if args.command == "partition":
        service.cmd_partition()
    elif args.command == "train":
        service.cmd_train()
    elif args.command == "eval":
        sweep = _lambda_list(args.lambda_sweep) if args.lambda_sweep is not None else None
        if args.in_process:
            service.run(sweep)
        else:
            service.cmd_eval(args.checkpoints, sweep)
    elif args.command == "report":
        summary = service.cmd_report(args.metrics)
        for method, stats in summary.methods.items():
            overall = stats.overall
            logger.info(f"{method}: overall {overall.mean} +/- {overall.std} over seeds {stats.seeds}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point; returns the process exit code."""
    setup_logging()
    try:
        run(argv)
    except FedECLError as exc:
        logger.error(f"fedecl error: {exc.message}")
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"Unexpected error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
