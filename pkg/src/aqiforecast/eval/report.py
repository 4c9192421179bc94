"""Markdown and CSV reports of benchmark results, plus plot-data files.

The markdown groups results by pollutant. Baseline families share one table
with MAE/RMSE/NMSE columns for each lag; each physics family gets a table
with one row per loss-weight pair, the ``(1, 0)`` row carrying the baseline
family's name. R2 appears only in the CSV.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from ..ingest import Pollutant
from ..lagged import SplitDataset
from ..models import Family, FittedModel
from .benchmark import BenchmarkResult, BenchmarkRun, plot_rows
from .metrics import MetricBundle

FORMATS = ("markdown", "csv")
METRIC_NAMES = ("mae", "mse", "rmse", "nmse", "r2")
_TABLE_METRICS = ("mae", "rmse", "nmse")


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _metric_cells(result: BenchmarkResult | None) -> list[str]:
    if result is None:
        return ["n/a"] * len(_TABLE_METRICS)
    if not result.ok:
        return ["FAILED"] * len(_TABLE_METRICS)
    return [_fmt(getattr(result.test, m)) for m in _TABLE_METRICS]


def _table(header: list[str], rows: list[list[str]], n_left: int) -> list[str]:
    align = [":--"] * n_left + ["--:"] * (len(header) - n_left)
    lines = ["| " + " | ".join(header) + " |", "| " + " | ".join(align) + " |"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def _markdown(results: Sequence[BenchmarkResult]) -> str:
    lags = sorted({r.lag for r in results})
    seeds = sorted({r.seed for r in results})
    index = {(r.pollutant, r.lag, r.family, r.lambda_data, r.lambda_phys, r.seed): r
             for r in results}
    metric_header = [f"LAG {lag} {m.upper()}" for lag in lags for m in _TABLE_METRICS]

    def label(name: str, seed: int) -> str:
        return name if len(seeds) == 1 else f"{name} (seed {seed})"

    out = ["# AQI forecasting benchmark", "",
           "Test-set errors in AQI units; NMSE is relative to the test-set variance.", ""]
    for pollutant in Pollutant:
        rows_p = [r for r in results if r.pollutant is pollutant]
        if not rows_p:
            continue
        out += [f"## {pollutant.value}", ""]
        baselines = [f for f in Family if not f.is_physics and any(r.family is f for r in rows_p)]
        if baselines:
            rows = []
            for fam in baselines:
                for seed in seeds:
                    rows.append([label(fam.label, seed)] + [
                        c for lag in lags
                        for c in _metric_cells(index.get((pollutant, lag, fam, 1.0, 0.0, seed)))
                    ])
            out += ["### Baseline models", ""] + _table(["Model"] + metric_header, rows, 1) + [""]
        for fam in (Family.MLP_PHYS, Family.LSTM_PHYS):
            fam_rows = [r for r in rows_p if r.family is fam]
            if not fam_rows:
                continue
            weights = sorted({(r.lambda_data, r.lambda_phys) for r in fam_rows})
            rows = []
            for ld, lp in weights:
                name = fam.baseline.label if lp == 0.0 else fam.label
                for seed in seeds:
                    rows.append([label(name, seed), f"{ld:.1f}", f"{lp:.1f}"] + [
                        c for lag in lags
                        for c in _metric_cells(index.get((pollutant, lag, fam, ld, lp, seed)))
                    ])
            out += [f"### {fam.label}", ""]
            out += _table(["Model", "lambda_data", "lambda_phys"] + metric_header, rows, 1) + [""]
    failed = [r for r in results if not r.ok]
    if failed:
        out += ["## Failed cells", ""]
        out += [f"- {r.cell.name}: {r.error}" for r in failed] + [""]
    return "\n".join(out)


def _csv(results: Sequence[BenchmarkResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["pollutant", "lag", "family", "lambda_data", "lambda_phys", "seed", "status",
              "n_train", "n_test"]
    header += [f"{split}_{m}" for split in ("train", "test") for m in METRIC_NAMES] + ["error"]
    writer.writerow(header)
    for r in results:
        row = [r.pollutant.value, r.lag, r.family.value, repr(r.lambda_data),
               repr(r.lambda_phys), r.seed, "ok" if r.ok else "failed", r.n_train, r.n_test]
        for bundle in (r.train, r.test):
            row += [repr(getattr(bundle, m)) if bundle else "" for m in METRIC_NAMES]
        row.append(r.error or "")
        writer.writerow(row)
    return buf.getvalue()


def emit_report(results: Iterable[BenchmarkResult] | BenchmarkRun, fmt: str = "markdown") -> str:
    if isinstance(results, BenchmarkRun):
        results = results.results
    results = list(results)
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if not results:
        raise ValueError("no results to report")
    return _markdown(results) if fmt == "markdown" else _csv(results)


def emit_plot_data(model: FittedModel, split: SplitDataset, path: str | Path | None = None) -> str:
    """``DATE,TRUE_AQI,PRED_AQI`` over the test rows; optionally written to ``path``."""
    text = plot_rows(model, split.test)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def timings_csv(results: Iterable[BenchmarkResult]) -> str:
    lines = ["cell,wall_time_s"]
    lines += [f"{r.cell.name},{r.wall_time:.3f}" for r in results]
    return "\n".join(lines) + "\n"


def write_run(run: BenchmarkRun, out_dir: str | Path) -> dict[str, Path]:
    """Write report.md, results.csv, manifest.json and timings.csv under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "markdown": out / "report.md",
        "csv": out / "results.csv",
        "manifest": out / "manifest.json",
        "timings": out / "timings.csv",
    }
    if run.results:
        paths["markdown"].write_text(emit_report(run, "markdown"), encoding="utf-8")
        paths["csv"].write_text(emit_report(run, "csv"), encoding="utf-8")
    paths["manifest"].write_text(json.dumps(run.manifest(), indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    paths["timings"].write_text(timings_csv(run.results), encoding="utf-8")
    return paths


def read_results_csv(path: str | Path) -> list[BenchmarkResult]:
    """Parse a results CSV written by :func:`emit_report` back into results."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        bundles = []
        for split in ("train", "test"):
            if row["status"] == "ok":
                bundles.append(MetricBundle(*(float(row[f"{split}_{m}"]) for m in METRIC_NAMES)))
            else:
                bundles.append(None)
        out.append(BenchmarkResult(
            Pollutant.parse(row["pollutant"]), int(row["lag"]), Family.parse(row["family"]),
            float(row["lambda_data"]), float(row["lambda_phys"]), int(row["seed"]),
            bundles[0], bundles[1], 0.0, int(row["n_train"]), int(row["n_test"]),
            row["error"] or None,
        ))
    return out
