"""Metrics, the benchmark grid runner and report emission."""

from .benchmark import (
    BenchmarkGrid,
    BenchmarkResult,
    BenchmarkRun,
    GridCell,
    dataset_digest,
    load_datasets,
    resolve_overrides,
    run_benchmark,
    run_cell,
    spec_for,
)
from .metrics import MetricBundle, compute_metrics, mae, mse, nmse, r2, rmse
from .report import emit_plot_data, emit_report, read_results_csv, timings_csv, write_run

__all__ = [
    "BenchmarkGrid", "BenchmarkResult", "BenchmarkRun", "GridCell", "MetricBundle",
    "compute_metrics", "dataset_digest", "emit_plot_data", "emit_report", "load_datasets",
    "mae", "mse", "nmse", "r2", "read_results_csv", "resolve_overrides", "rmse",
    "run_benchmark", "run_cell", "spec_for", "timings_csv", "write_run",
]
