"""Command-line entry point: ingest, build-lags, train, benchmark, report.

Output layout under the output directory::

    series/<P>_series.csv, series/<P>_summary.json
    lags/<P>_LAG_<L>.csv
    results/report.md, results.csv, manifest.json, timings.csv
    results/checkpoints/, results/plots/, results/errors/
    train/<cell>.json, train/<cell>_plot.csv
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import OUT_ENV, ConfigError, RunConfig, load_config, resolve_output_dir
from .eval import (
    BenchmarkGrid,
    GridCell,
    compute_metrics,
    emit_plot_data,
    emit_report,
    read_results_csv,
    run_benchmark,
    spec_for,
    write_run,
)
from .ingest import IngestError, Pollutant, load_years, read_series, series_summary, write_series
from .lagged import build_lag_dataset, chrono_split, lag_filename, read_lag_dataset, write_lag_dataset
from .models import Family, fit, predict, save_checkpoint
from .physics import load_breakpoint_table

log = logging.getLogger("aqiforecast")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_FAILED = 100


def series_path(out: Path, pollutant: Pollutant) -> Path:
    return out / "series" / f"{pollutant.value}_series.csv"


def _tables(config: RunConfig) -> dict:
    return {p: load_breakpoint_table(path) for p, path in config.breakpoints.items()}


def cmd_ingest(config: RunConfig, out: Path) -> int:
    missing = [p for p in config.pollutants if p not in config.data]
    if missing:
        log.error("no input files configured for %s", ", ".join(p.value for p in missing))
        return 1
    (out / "series").mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for pollutant in config.pollutants:
        paths = config.data[pollutant]
        absent = [p for p in paths if not Path(p).is_file()]
        if absent:
            for p in absent:
                log.error("%s: input file not found: %s", pollutant.value, p)
            status = 1
            continue
        try:
            series, dropped = load_years(paths, pollutant, config.column_map.get(pollutant),
                                         config.date_format)
        except (IngestError, OSError) as exc:
            log.error("%s: %s", pollutant.value, exc)
            status = 1
            continue
        target = series_path(out, pollutant)
        write_series(series, target)
        summary = {"pollutant": pollutant.value, "files": [str(p) for p in paths],
                   "dropped_rows": dropped, **series_summary(series).as_dict()}
        target.with_name(f"{pollutant.value}_summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"{pollutant.value}: {len(series)} daily rows -> {target}")
    return status


def cmd_build_lags(config: RunConfig, out: Path) -> int:
    (out / "lags").mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for pollutant in config.pollutants:
        src = series_path(out, pollutant)
        if not src.is_file():
            log.error("%s: series file not found: %s (run ingest first)", pollutant.value, src)
            status = 1
            continue
        series = read_series(src, pollutant)
        for lag in config.lags:
            try:
                ds = build_lag_dataset(series, lag)
            except ValueError as exc:
                log.error("%s lag %d: %s", pollutant.value, lag, exc)
                status = 1
                continue
            target = out / "lags" / lag_filename(pollutant, lag)
            write_lag_dataset(ds, target)
            print(f"{pollutant.value} lag {lag}: {len(ds)} rows -> {target}")
    return status


def cmd_train(config: RunConfig, out: Path, args) -> int:
    pollutant = Pollutant.parse(args.pollutant)
    family = Family.parse(args.family)
    ld, lp = (args.lambda_data, args.lambda_phys)
    if lp is None:
        lp = 0.0
    if ld is None:
        ld = 1.0
    seed = config.seeds[0]
    cell = GridCell(pollutant, args.lag, family, ld, lp, seed)
    src = out / "lags" / lag_filename(pollutant, args.lag)
    if not src.is_file():
        log.error("lag file not found: %s (run build-lags first)", src)
        return 1
    split = chrono_split(read_lag_dataset(src, pollutant), config.alpha)
    spec = spec_for(cell, config.hyperparameters)
    model = fit(split, spec, _tables(config).get(pollutant))
    metrics = compute_metrics(split.test.y, predict(model, split.test))
    target = out / "train" / f"{cell.name}.json"
    save_checkpoint(model, target)
    emit_plot_data(model, split, target.with_name(f"{cell.name}_plot.csv"))
    print(f"{cell.name} test MAE={metrics.mae:.4f} RMSE={metrics.rmse:.4f} "
          f"NMSE={metrics.nmse:.4f} R2={metrics.r2:.4f} checkpoint={target}")
    return EXIT_OK


def cmd_benchmark(config: RunConfig, out: Path, args) -> int:
    grid = BenchmarkGrid(config.pollutants, config.lags, config.families, config.lambda_grid,
                         config.seeds)
    results_dir = out / "results"
    run = run_benchmark(grid, out / "lags", jobs=args.jobs, overrides=config.hyperparameters,
                        alpha=config.alpha, artifacts_dir=results_dir, tables=_tables(config))
    paths = write_run(run, results_dir)
    if run.results:
        sys.stdout.write(emit_report(run, args.format))
    failed = len(run.failures)
    print(f"{len(run.results)} cells, {failed} failed; report: {paths['markdown']}",
          file=sys.stderr)
    for r in run.failures:
        log.error("failed cell %s: %s", r.cell.name, r.error)
    return min(failed, EXIT_MAX_FAILED)


def cmd_report(config: RunConfig, out: Path, args) -> int:
    results_dir = Path(args.results) if args.results else out / "results"
    source = results_dir / "results.csv"
    if not source.is_file():
        log.error("results file not found: %s (run benchmark first)", source)
        return 1
    results = read_results_csv(source)
    if not results:
        log.error("%s holds no results", source)
        return 1
    text = emit_report(results, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    common.add_argument("--seed", type=int, help="single seed replacing the configured seeds")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for the benchmark grid (default: CPU count)")
    common.add_argument("--format", choices=("csv", "markdown"), default="markdown",
                        help="report format written to stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aqiforecast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="raw EPA files -> daily series")
    sub.add_parser("build-lags", parents=[common], help="daily series -> lag datasets")
    train = sub.add_parser("train", parents=[common], help="fit one grid cell")
    train.add_argument("--pollutant", required=True)
    train.add_argument("--lag", type=int, required=True)
    train.add_argument("--family", required=True)
    train.add_argument("--lambda-data", type=float)
    train.add_argument("--lambda-phys", type=float)
    sub.add_parser("benchmark", parents=[common], help="run the full grid")
    report = sub.add_parser("report", parents=[common], help="re-render a results directory")
    report.add_argument("results", nargs="?", help="results directory (default: <out>/results)")
    report.add_argument("--output", help="write the report here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        config = load_config(args.config, check_paths=args.command == "ingest")
    except ConfigError as exc:
        for err in exc.errors:
            log.error("config: %s", err)
        return EXIT_USAGE
    if args.seed is not None:
        if args.seed < 0:
            parser.error("--seed must be non-negative")
        config = config.replace(seeds=(args.seed,))
    out = resolve_output_dir(config, args.out)
    handlers = {
        "ingest": lambda: cmd_ingest(config, out),
        "build-lags": lambda: cmd_build_lags(config, out),
        "train": lambda: cmd_train(config, out, args),
        "benchmark": lambda: cmd_benchmark(config, out, args),
        "report": lambda: cmd_report(config, out, args),
    }
    try:
        return handlers[args.command]()
    except (ValueError, OSError) as exc:
        log.error("%s: %s", args.command, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
