"""Command-line entry point for GMI survival estimation and simulation."""

from __future__ import annotations

import argparse
import math
import sys
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path
from typing import Any

import pandas as pd
import yaml
from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from src import __version__
from src.core.analysis_service import AnalysisService
from src.core.export_service import ExportService
from src.core.kernel import BANDWIDTH_PRESETS
from src.core.scenario_runner import ScenarioGrid, build_scenarios, grid_frame, run_grid
from src.core.simulation import FrailtyModel, calibrate_alpha, calibrate_tau
from src.data.csv_loader import parse_csv, restrict_followup
from src.data.models import ColumnMap, Dataset, EstimatorMethod
from src.utils.config import Config, load_config, validate_config
from src.utils.error_handler import (
    EXIT_INTERRUPTED,
    EXIT_SUCCESS,
    ErrorHandler,
    format_error_for_display,
)
from src.utils.exceptions import ConfigurationError, SimulationError, UsageError
from src.utils.logging import console as log_console
from src.utils.logging import get_logger, log_run, setup_logging, verbosity_level

DEFAULT_SCENARIO_FILE = Path("config/scenarios.yaml")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="Path to configuration file. Default: config/settings.yaml",
    )
    parser.add_argument(
        "--output", "-o", type=Path, default=None, help="Write results to this file"
    )
    parser.add_argument(
        "--format",
        choices=["table", "csv", "json"],
        default=None,
        help="Output format. Default: table on the terminal, or from the --output suffix",
    )
    parser.add_argument("--seed", type=int, default=None, help="Master random seed")
    parser.add_argument(
        "--verbose",
        "-v",
        action="count",
        default=0,
        help="Increase output verbosity. Use -v or -vv",
    )


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    source = parser.add_argument_group("data")
    source.add_argument("--data", type=Path, default=None, help="CSV file with t0,time1,status1")
    source.add_argument(
        "--synthetic",
        action="store_true",
        help="Use a 34-record synthetic trial dataset instead of --data",
    )
    source.add_argument(
        "--cap", type=float, default=None, help="Restrict current-line follow-up to CAP months"
    )
    est = parser.add_argument_group("estimation")
    est.add_argument(
        "--thresholds",
        type=float,
        nargs="+",
        default=None,
        help="Ratio thresholds r. Default: 1.3 1.5 1.7",
    )
    est.add_argument("--resamples", type=int, default=None, help="Bootstrap resamples B")
    est.add_argument(
        "--bandwidth-exponent",
        type=_exponent,
        default=None,
        help=f"Bandwidth rule exponent or preset ({', '.join(BANDWIDTH_PRESETS)})",
    )
    est.add_argument("--bandwidth", type=float, default=None, help="Fixed kernel bandwidth")
    est.add_argument(
        "--adjust-covariates",
        action="store_true",
        help="Use the covariate-adjusted proposed estimator (z/v columns)",
    )


def _exponent(raw: str) -> float:
    if raw in BANDWIDTH_PRESETS:
        return BANDWIDTH_PRESETS[raw]
    try:
        return float(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number or preset: {raw!r}") from e


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per workflow."""
    parser = argparse.ArgumentParser(
        prog="gmi",
        description="Nonparametric estimation of the growth modulation index survival function",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  gmi estimate --data trial.csv --cap 9          Estimates at r = 1.3, 1.5, 1.7
  gmi curve --data trial.csv -o curves.csv       Step curves with log-log intervals
  gmi compare --data trial.csv --null-proportion 0.2
  gmi simulate --n 50 --sigma 0.3 --censoring 0.2 --replicates 500
  gmi calibrate --sigma 0.3 --correlation 0.5 --censoring 0.2
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    estimate = sub.add_parser("estimate", help="Estimates, SEs, CIs, %%Dif and Wald p-values")
    _add_common(estimate)
    _add_data_options(estimate)

    curve = sub.add_parser("curve", help="Survival curves of the GMI with pointwise intervals")
    _add_common(curve)
    _add_data_options(curve)
    curve.add_argument(
        "--methods",
        nargs="+",
        choices=[m.value for m in EstimatorMethod if m is not EstimatorMethod.COVARIATE],
        default=None,
        help="Methods to export. Default: all four",
    )

    compare = sub.add_parser("compare", help="Wald tests against the proposed estimator")
    _add_common(compare)
    _add_data_options(compare)
    compare.add_argument(
        "--null-proportion",
        type=float,
        default=None,
        help="Also test S(r) > P against S(r) <= P at each threshold",
    )
    compare.add_argument(
        "--group-column",
        default=None,
        help="Two-level categorical column for a between-group test",
    )

    simulate = sub.add_parser("simulate", help="Monte Carlo bias, SE, SEE and coverage")
    _add_common(simulate)
    simulate.add_argument(
        "--scenarios",
        type=Path,
        default=None,
        help="YAML scenario grid. Default: config/scenarios.yaml if present",
    )
    simulate.add_argument("--sigma", type=float, nargs="+", default=None)
    simulate.add_argument("--ratio-median", type=float, nargs="+", default=None)
    simulate.add_argument("--correlation", type=float, nargs="+", default=None)
    simulate.add_argument("--censoring", type=float, nargs="+", default=None)
    simulate.add_argument("--n", type=int, nargs="+", default=None)
    simulate.add_argument("--thresholds", type=float, nargs="+", default=None)
    simulate.add_argument("--replicates", type=int, default=None)
    simulate.add_argument("--bootstrap-b", type=int, default=None)
    simulate.add_argument("--bandwidth-exponent", type=_exponent, default=None)
    simulate.add_argument("--truth", choices=["monte_carlo", "closed_form"], default=None)
    simulate.add_argument(
        "--workers", type=int, default=None, help="Replicate processes (0 = CPU count)"
    )

    calibrate = sub.add_parser("calibrate", help="Calibrate frailty alpha and censoring tau")
    _add_common(calibrate)
    calibrate.add_argument("--sigma", type=float, required=True)
    calibrate.add_argument("--ratio-median", type=float, default=1.0)
    calibrate.add_argument("--mu", type=float, default=None)
    calibrate.add_argument("--correlation", type=float, required=True)
    calibrate.add_argument("--censoring", type=float, default=None)
    calibrate.add_argument("--samples", type=int, default=None)

    return parser


def parse_arguments(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments."""
    return build_parser().parse_args(argv)


def _apply_overrides(config: Config, args: argparse.Namespace) -> Config:
    """Fold command-line flags into the loaded configuration."""
    estimation, bootstrap, simulation = config.estimation, config.bootstrap, config.simulation
    if getattr(args, "bandwidth_exponent", None) is not None:
        estimation = replace(estimation, bandwidth_exponent=args.bandwidth_exponent)
    if getattr(args, "thresholds", None):
        estimation = replace(estimation, thresholds=list(args.thresholds))
    if getattr(args, "cap", None) is not None:
        estimation = replace(estimation, followup_cap=args.cap)
    if args.seed is not None:
        bootstrap = replace(bootstrap, seed=args.seed)
    if getattr(args, "resamples", None) is not None:
        bootstrap = replace(bootstrap, resamples=args.resamples)
    if getattr(args, "workers", None) is not None:
        simulation = replace(simulation, workers=args.workers)
    return replace(config, estimation=estimation, bootstrap=bootstrap, simulation=simulation)


def _resolve_format(args: argparse.Namespace) -> str:
    fmt = args.format
    if args.output is None:
        return fmt or "table"
    if fmt == "table":
        raise UsageError("--format table cannot be combined with --output")
    if fmt is None:
        return "json" if args.output.suffix.lower() == ".json" else "csv"
    return fmt


def load_dataset(args: argparse.Namespace, config: Config) -> Dataset:
    """Read --data (or build the synthetic stand-in) and apply the follow-up cap."""
    if args.data is not None and args.synthetic:
        raise UsageError("--data and --synthetic cannot be used together")
    if args.data is None and not args.synthetic:
        raise UsageError("one of --data or --synthetic is required")

    if args.synthetic:
        from src.core.simulation import synthetic_trial_dataset

        dataset = synthetic_trial_dataset(seed=args.seed if args.seed is not None else 2012)
    else:
        io = config.io
        cmap = ColumnMap(t0=io.t0_column, time1=io.time1_column, status1=io.status1_column)
        dataset = parse_csv(args.data, cmap, io.continuous_prefix, io.categorical_prefix)

    cap = config.estimation.followup_cap
    if cap is not None:
        dataset = restrict_followup(dataset, cap)
    return dataset


def _format_cell(value: Any, decimals: int) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else ""
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        return f"{value:.{decimals}f}"
    return str(value)


def print_frame(console: Console, frame: pd.DataFrame, title: str, decimals: int) -> None:
    """Render a results table with a fixed number of decimals."""
    table = Table(title=title, title_justify="left")
    for column in frame.columns:
        table.add_column(str(column), justify="left" if frame[column].dtype == object else "right")
    for row in frame.itertuples(index=False):
        table.add_row(*(_format_cell(value, decimals) for value in row))
    console.print(table)


def _emit(
    args: argparse.Namespace,
    console: Console,
    decimals: int,
    title: str,
    frame: pd.DataFrame,
    write: Any,
) -> None:
    fmt = _resolve_format(args)
    if fmt == "table":
        print_frame(console, frame, title, decimals)
    else:
        write(args.output, fmt)


def cmd_estimate(args: argparse.Namespace, config: Config, console: Console) -> dict[str, Any]:
    dataset = load_dataset(args, config)
    service = AnalysisService(config, bandwidth=args.bandwidth)
    report = service.estimate(dataset, config.estimation.thresholds, args.adjust_covariates)
    decimals = config.io.table_decimals

    title = (
        f"GMI survival (n={report.n}, events={report.n_events}, "
        f"censoring {report.censoring_rate:.0%}, bandwidth {report.bandwidth:.{decimals}f})"
    )
    frame = report.to_frame().drop(columns=["degenerate"])
    exporter = ExportService()
    _emit(
        args, console, decimals, title, frame, lambda p, f: exporter.export_estimates(report, p, f)
    )
    if _resolve_format(args) == "table":
        for method, reason in report.skipped.items():
            console.print(f"{method} skipped: {reason}", highlight=False, markup=False)
    return {"n": report.n, "thresholds": report.thresholds, "skipped": list(report.skipped)}


def cmd_curve(args: argparse.Namespace, config: Config, console: Console) -> dict[str, Any]:
    dataset = load_dataset(args, config)
    service = AnalysisService(config, bandwidth=args.bandwidth)
    methods = [EstimatorMethod(m) for m in args.methods] if args.methods else None
    curves = service.curves(dataset, methods, args.adjust_covariates)
    frame = curves.to_frame()
    exporter = ExportService()
    _emit(
        args,
        console,
        config.io.table_decimals,
        "GMI survival curves (right-continuous steps)",
        frame,
        lambda p, f: exporter.export_curves(curves, p, f),
    )
    return {"n": dataset.n, "methods": [m.value for m in curves.curves], "rows": len(frame)}


def cmd_compare(args: argparse.Namespace, config: Config, console: Console) -> dict[str, Any]:
    if args.null_proportion is not None and not 0 < args.null_proportion < 1:
        raise UsageError("--null-proportion must be in (0, 1)")
    dataset = load_dataset(args, config)
    service = AnalysisService(config, bandwidth=args.bandwidth)
    report = service.compare(
        dataset,
        config.estimation.thresholds,
        args.adjust_covariates,
        null_proportion=args.null_proportion,
        group_column=args.group_column,
    )
    exporter = ExportService()
    _emit(
        args,
        console,
        config.io.table_decimals,
        "Wald tests",
        report.to_frame(),
        lambda p, f: exporter.export_comparison(report, p, f),
    )
    return {"n": dataset.n, "tests": len(report.to_frame())}


def load_grid(args: argparse.Namespace, config: Config) -> ScenarioGrid:
    """Scenario grid from settings, then the scenario file, then command-line axes."""
    sim = config.simulation
    values: dict[str, Any] = {
        "mu": sim.mu,
        "replicates": sim.replicates,
        "bootstrap_b": sim.bootstrap_b,
        "truth": sim.truth,
        "truth_draws": sim.truth_draws,
        "calibration_samples": sim.calibration_samples,
        "failure_threshold": sim.failure_threshold,
        "bandwidth_exponent": config.estimation.bandwidth_exponent,
    }

    path = args.scenarios
    if path is None and DEFAULT_SCENARIO_FILE.exists():
        path = DEFAULT_SCENARIO_FILE
    if path is not None:
        if not Path(path).exists():
            raise UsageError(f"scenario file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in scenario file: {e}", cause=e) from e
        if not isinstance(loaded, dict):
            raise ConfigurationError("scenario file must contain a mapping")
        values.update(loaded.get("grid", loaded))

    overrides = {
        "sigma": args.sigma,
        "ratio_median": args.ratio_median,
        "correlation": args.correlation,
        "censoring": args.censoring,
        "n": args.n,
        "thresholds": args.thresholds,
        "replicates": args.replicates,
        "bootstrap_b": args.bootstrap_b,
        "bandwidth_exponent": args.bandwidth_exponent,
        "truth": args.truth,
        "seed": args.seed,
    }
    values.update({key: value for key, value in overrides.items() if value is not None})
    return ScenarioGrid.from_dict(values)


def cmd_simulate(args: argparse.Namespace, config: Config, console: Console) -> dict[str, Any]:
    grid = load_grid(args, config)
    scenarios = build_scenarios(grid)
    if not scenarios:
        raise SimulationError("the scenario grid is empty")

    total = sum(s.replicates for s in scenarios)
    with Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=log_console,
        transient=True,
    ) as progress:
        task = progress.add_task("Replicates", total=total)
        results = run_grid(
            scenarios,
            workers=config.simulation.workers,
            on_progress=lambda k: progress.advance(task, k),
        )

    frame = grid_frame(results)
    exporter = ExportService()
    _emit(
        args,
        console,
        config.io.table_decimals,
        f"Simulation ({grid.replicates} replicates, B={grid.bootstrap_b})",
        frame,
        lambda p, f: exporter.export_scenarios(results, p, f),
    )
    return {"scenarios": len(scenarios), "replicates": grid.replicates}


def cmd_calibrate(args: argparse.Namespace, config: Config, console: Console) -> dict[str, Any]:
    sim = config.simulation
    samples = args.samples if args.samples is not None else sim.calibration_samples
    seed_kwargs = {"seed": args.seed} if args.seed is not None else {}
    model = FrailtyModel(
        sigma=args.sigma,
        ratio_median=args.ratio_median,
        mu=args.mu if args.mu is not None else sim.mu,
    )

    results = [calibrate_alpha(model, args.correlation, samples=samples, **seed_kwargs)]
    if args.censoring is not None:
        calibrated = model.with_alpha(results[0].value)
        results.append(calibrate_tau(calibrated, args.censoring, samples=samples, **seed_kwargs))

    frame = pd.DataFrame(
        [
            {"parameter": r.parameter, "value": r.value, "target": r.target, "achieved": r.achieved}
            for r in results
        ]
    )
    exporter = ExportService()
    _emit(
        args,
        console,
        config.io.table_decimals,
        f"Calibration (sigma={args.sigma}, R={args.ratio_median}, {samples} samples)",
        frame,
        lambda p, f: exporter.export_calibration(results, p, f),
    )
    return {r.parameter: r.value for r in results}


HANDLERS = {
    "estimate": cmd_estimate,
    "curve": cmd_curve,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point for the application."""
    args = parse_arguments(argv)
    console = Console()
    logger = get_logger(__name__)
    handler = ErrorHandler(logger)

    try:
        config = load_config(args.config)

        setup_logging(
            level=verbosity_level(config.logging.level, args.verbose),
            log_file=config.logging.log_file,
            json_file=config.logging.json_file,
        )
        logger.debug(f"Configuration loaded from {args.config or 'defaults'}")

        config = _apply_overrides(config, args)
        issues = validate_config(config)
        if issues:
            raise ConfigurationError("; ".join(issues), details={"issues": issues})

        details = HANDLERS[args.command](args, config, console)
        log_run(logger, args.command, details)
        return EXIT_SUCCESS

    except KeyboardInterrupt:
        log_console.print("\nOperation cancelled by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        result = handler.handle(e)
        log_console.print(format_error_for_display(result), highlight=False, markup=False)
        return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
