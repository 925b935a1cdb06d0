"""Command-line interface: measure, rank, verify-bound, report and serve."""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .bound_verify import results_to_csv, sweep_concentration
from .config_manager import ConfigManager
from .errors import ToolkitError
from .models import (
    ConcentrationResult,
    ConcentrationSource,
    ExperimentConfig,
    RankMetric,
    ReportFormat,
    SourceKind,
    ToolkitSettings,
)
from .rank import consistency_report, rankings_from_records
from .record_manager import RecordManager
from .report import emit_report
from .runner import run_experiment
from .utils.logging import set_level, setup_logger
from .utils.validation import validate_output_dir, validate_worker_count

logger = setup_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for all subcommands."""
    parser = argparse.ArgumentParser(
        prog="cdtoolkit",
        description="Confidence Dimension toolkit - rank models by generalization ability",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--data-dir",
        type=Path,
        help="Data directory for records and reports (default: ~/.cdtoolkit)",
    )
    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    measure = commands.add_parser("measure", help="Run an experiment config and persist it")
    measure.add_argument("config", type=Path, help="Experiment config (JSON)")
    measure.add_argument("--seed", type=int, help="Override the config's master_seed")
    measure.add_argument("--workers", type=int, help="Cells run concurrently")
    measure.add_argument("--output", type=Path, help="Write the record here as well")

    rank = commands.add_parser("rank", help="Kendall-tau consistency of stored rankings")
    rank.add_argument("records", nargs="+", help="Record files or record IDs")
    rank.add_argument(
        "--metric", type=RankMetric, choices=list(RankMetric), default=RankMetric.CD
    )

    verify = commands.add_parser("verify-bound", help="Monte Carlo check of the Hoeffding floor")
    verify.add_argument("--m", type=int, nargs="+", required=True, help="Samples per trial")
    verify.add_argument("--delta", type=float, nargs="+", required=True, help="Thresholds")
    verify.add_argument("--trials", type=int, default=10_000)
    verify.add_argument(
        "--source", type=SourceKind, choices=list(SourceKind), default=SourceKind.BERNOULLI
    )
    verify.add_argument("--p", type=float, default=0.5, help="Bernoulli probability")
    verify.add_argument("--a", type=float, default=2.0, help="Beta shape a")
    verify.add_argument("--b", type=float, default=2.0, help="Beta shape b")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--csv", action="store_true", help="Emit full-precision CSV")

    report = commands.add_parser("report", help="Render a stored record")
    report.add_argument("record", help="Record file or record ID")
    report.add_argument(
        "--format", type=ReportFormat, choices=list(ReportFormat), default=ReportFormat.TABLE
    )
    report.add_argument("--output", type=Path, help="Write to a file instead of stdout")

    commands.add_parser("serve", help="Run the MCP tool server on stdio")
    return parser


def _settings(args: argparse.Namespace) -> ToolkitSettings:
    overrides = {"data_dir": args.data_dir} if args.data_dir else {}
    settings = ToolkitSettings(**overrides)
    set_level(args.log_level or settings.log_level)
    return settings


def _measure(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    config = ConfigManager().load(args.config)
    if args.seed is not None:
        config = ExperimentConfig.model_validate(
            {**config.model_dump(), "master_seed": args.seed}
        )

    workers = args.workers or config.workers or settings.workers
    is_valid, error = validate_worker_count(workers)
    if not is_valid:
        logger.warning(error)

    record = run_experiment(config, workers=workers)
    path = RecordManager(settings).save(record)
    if args.output:
        RecordManager(settings).save(record, args.output)
        path = args.output

    if not record.successful_cells():
        logger.error(f"All {len(record.cells)} cells failed; record saved to {path}")
        return 1
    print(emit_report(record, ReportFormat.TABLE), end="")
    print(f"record: {path}")
    return 0


def _rank(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    manager = RecordManager(settings)
    records = [manager.load(ref) for ref in args.records]
    report = consistency_report(rankings_from_records(records, args.metric))

    for ranking in report.rankings:
        order = " < ".join(f"{e.model_id} ({e.value:.4f})" for e in ranking.ordered)
        print(f"{ranking.setting_id}: {order}")
    print(f"min_tau = {report.min_tau:g}")
    print("consistent" if report.consistent else "inconsistent")
    return 0


def _format_results(results: Sequence[ConcentrationResult]) -> str:
    lines = [
        f"{'m':>7} {'delta':>7} {'source':<16} {'trials':>7} "
        f"{'empirical':>9} {'floor':>9} {'slack':>9} {'stderr':>9}"
    ]
    for r in results:
        lines.append(
            f"{r.m:>7} {r.delta:>7g} {r.source:<16} {r.trials:>7} "
            f"{r.empirical_coverage:>9.5f} {r.theoretical_floor:>9.5f} "
            f"{r.slack:>9.5f} {r.stderr:>9.5f}"
        )
    return "\n".join(lines) + "\n"


def _verify_bound(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    source = ConcentrationSource(kind=args.source, p=args.p, a=args.a, b=args.b)
    results = sweep_concentration(args.m, args.delta, source, args.trials, args.seed)
    print(results_to_csv(results) if args.csv else _format_results(results), end="")

    below = [r for r in results if not r.within_tolerance()]
    for r in below:
        logger.warning(f"m={r.m} delta={r.delta}: coverage below floor by more than 3 stderr")
    return 0


def _report(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    record = RecordManager(settings).load(args.record)
    document = emit_report(record, args.format)
    if args.output is None:
        print(document, end="")
        return 0

    is_valid, error = validate_output_dir(args.output.parent)
    if not is_valid:
        raise ValueError(error)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(document, encoding="utf-8")
    logger.info(f"Wrote {args.format.value} report to {args.output}")
    return 0


def _serve(args: argparse.Namespace, settings: ToolkitSettings) -> int:
    from .server import initialize_managers, mcp

    initialize_managers(settings)
    logger.info("Starting cdtoolkit MCP server...")
    try:
        mcp.run()
    except KeyboardInterrupt:
        logger.info("Received interrupt, shutting down...")
    return 0


COMMANDS = {
    "measure": _measure,
    "rank": _rank,
    "verify-bound": _verify_bound,
    "report": _report,
    "serve": _serve,
}


def cli(argv: Sequence[str] | None = None) -> int:
    """Run one command and return its exit status.

    Returns:
        0 on success, 1 when the command fails, 2 on a usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        settings = _settings(args)
        return COMMANDS[args.command](args, settings)
    except (ToolkitError, ValueError, KeyError, OSError, RuntimeError) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        logger.error(f"{args.command} failed: {message}")
        print(f"cdtoolkit {args.command}: error: {message}", file=sys.stderr)
        return 1
