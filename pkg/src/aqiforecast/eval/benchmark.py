"""The benchmark grid: every (pollutant, lag, family, loss weights, seed) cell.

Cells are independent, so they may run in worker processes; results are
sorted by cell key afterwards, which makes serial and parallel runs
indistinguishable.
"""

from __future__ import annotations

import hashlib
import itertools
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .. import __version__
from .._accel import backend
from ..ingest import Pollutant
from ..lagged import LagDataset, chrono_split, lag_filename, read_lag_dataset
from ..models import DEFAULT_LAMBDA_GRID, Family, ModelSpec, fit, predict, save_checkpoint
from ..physics import BreakpointTable, LossWeights
from .metrics import MetricBundle, compute_metrics

_POLLUTANT_ORDER = {p: k for k, p in enumerate(Pollutant)}
_FAMILY_ORDER = {f: k for k, f in enumerate(Family)}


@dataclass(frozen=True)
class GridCell:
    pollutant: Pollutant
    lag: int
    family: Family
    lambda_data: float
    lambda_phys: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "pollutant", Pollutant.parse(self.pollutant))
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "lambda_data", float(self.lambda_data))
        object.__setattr__(self, "lambda_phys", float(self.lambda_phys))

    @property
    def sort_key(self) -> tuple:
        return (_POLLUTANT_ORDER[self.pollutant], self.lag, _FAMILY_ORDER[self.family],
                self.lambda_data, self.lambda_phys, self.seed)

    @property
    def name(self) -> str:
        return (f"{self.pollutant.value}_LAG_{self.lag}_{self.family.value}"
                f"_ld{self.lambda_data:g}_lp{self.lambda_phys:g}_seed{self.seed}")


@dataclass(frozen=True)
class BenchmarkGrid:
    pollutants: tuple = tuple(Pollutant)
    lags: tuple = (1, 7, 14, 30)
    families: tuple = tuple(Family)
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    seeds: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "pollutants", tuple(Pollutant.parse(p) for p in self.pollutants))
        object.__setattr__(self, "families", tuple(Family.parse(f) for f in self.families))
        object.__setattr__(self, "lags", tuple(int(v) for v in self.lags))
        object.__setattr__(self, "seeds", tuple(int(v) for v in self.seeds))
        rows = tuple(tuple(float(v) for v in row) for row in self.lambda_grid)
        for row in rows:
            LossWeights(*row)  # validates
        object.__setattr__(self, "lambda_grid", rows)
        if any(lag < 1 for lag in self.lags):
            raise ValueError("lags must be >= 1")

    def cells(self) -> list[GridCell]:
        out = []
        for p, lag, fam, seed in itertools.product(self.pollutants, self.lags, self.families,
                                                   self.seeds):
            rows = self.lambda_grid if fam.is_physics else ((1.0, 0.0),)
            out += [GridCell(p, lag, fam, ld, lp, seed) for ld, lp in rows]
        return sorted(set(out), key=lambda c: c.sort_key)

    def to_dict(self) -> dict:
        return {
            "pollutants": [p.value for p in self.pollutants],
            "lags": list(self.lags),
            "families": [f.value for f in self.families],
            "lambda_grid": [list(r) for r in self.lambda_grid],
            "seeds": list(self.seeds),
        }


@dataclass(frozen=True)
class BenchmarkResult:
    pollutant: Pollutant
    lag: int
    family: Family
    lambda_data: float
    lambda_phys: float
    seed: int
    train: MetricBundle | None
    test: MetricBundle | None
    wall_time: float = 0.0
    n_train: int = 0
    n_test: int = 0
    error: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "pollutant", Pollutant.parse(self.pollutant))
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "lambda_data", float(self.lambda_data))
        object.__setattr__(self, "lambda_phys", float(self.lambda_phys))

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def cell(self) -> GridCell:
        return GridCell(self.pollutant, self.lag, self.family, self.lambda_data,
                        self.lambda_phys, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pollutant"] = self.pollutant.value
        d["family"] = self.family.value
        return d


def resolve_overrides(overrides: Mapping | None, family: Family) -> dict:
    """Merge ``"all"``, baseline-family and family-specific override blocks.

    Physics families inherit their baseline's block so that both stay
    configured identically unless told otherwise.
    """
    merged: dict = {}
    if not overrides:
        return merged
    keys = ["all", family.baseline.value] + ([family.value] if family.is_physics else [])
    for key in keys:
        merged.update(overrides.get(key) or {})
    return merged


def spec_for(cell: GridCell, overrides: Mapping | None = None) -> ModelSpec:
    return ModelSpec.build(cell.family, resolve_overrides(overrides, cell.family),
                           (cell.lambda_data, cell.lambda_phys), cell.seed)


def dataset_digest(ds: LagDataset) -> str:
    h = hashlib.sha256()
    h.update(f"{ds.pollutant.value}:{ds.lag}:{len(ds)}".encode())
    for arr in (ds.dates.astype(np.int64), ds.target_dates.astype(np.int64), ds.x_conc,
                ds.x_aqi, ds.y):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def plot_rows(model, rows: LagDataset) -> str:
    """``DATE,TRUE_AQI,PRED_AQI`` text for ``rows``, dated by target day."""
    pred = predict(model, rows)
    lines = ["DATE,TRUE_AQI,PRED_AQI"]
    lines += [f"{d},{float(t)!r},{float(p)!r}" for d, t, p in zip(rows.target_dates, rows.y, pred)]
    return "\n".join(lines) + "\n"


def run_cell(cell: GridCell, dataset: LagDataset, overrides: Mapping | None = None,
             alpha: float = 0.8, artifacts_dir: str | Path | None = None,
             table: BreakpointTable | None = None) -> BenchmarkResult:
    """Fit and score one cell; any exception becomes a failed result."""
    start = time.perf_counter()
    n_train = n_test = 0
    try:
        split = chrono_split(dataset, alpha)
        n_train, n_test = len(split.train), len(split.test)
        model = fit(split, spec_for(cell, overrides), table)
        train_pred = predict(model, split.train)
        test_pred = predict(model, split.test)
        for label, pred in (("train", train_pred), ("test", test_pred)):
            if not np.all(np.isfinite(pred)):
                raise FloatingPointError(f"non-finite {label} predictions")
        train_m = compute_metrics(split.train.y, train_pred)
        test_m = compute_metrics(split.test.y, test_pred)
        if artifacts_dir is not None:
            root = Path(artifacts_dir)
            save_checkpoint(model, root / "checkpoints" / f"{cell.name}.json")
            plots = root / "plots"
            plots.mkdir(parents=True, exist_ok=True)
            (plots / f"{cell.name}.csv").write_text(plot_rows(model, split.test), encoding="utf-8")
        error = None
    except Exception as exc:  # a failed cell must not abort the grid
        train_m = test_m = None
        error = f"{type(exc).__name__}: {exc}"
        tb = traceback.format_exc(limit=3)
        if artifacts_dir is not None:
            errors = Path(artifacts_dir) / "errors"
            errors.mkdir(parents=True, exist_ok=True)
            (errors / f"{cell.name}.txt").write_text(tb, encoding="utf-8")
    return BenchmarkResult(cell.pollutant, cell.lag, cell.family, cell.lambda_data,
                           cell.lambda_phys, cell.seed, train_m, test_m,
                           time.perf_counter() - start, n_train, n_test, error)


def _missing(cell: GridCell, reason: str) -> BenchmarkResult:
    return BenchmarkResult(cell.pollutant, cell.lag, cell.family, cell.lambda_data,
                           cell.lambda_phys, cell.seed, None, None, error=reason)


def _job(args):
    return run_cell(*args)


def load_datasets(root: str | Path, pollutants: Sequence, lags: Sequence) -> dict:
    """Read ``<root>/<POLLUTANT>_LAG_<L>.csv`` files; absent files are skipped."""
    root = Path(root)
    out = {}
    for p, lag in itertools.product(pollutants, lags):
        p = Pollutant.parse(p)
        path = root / lag_filename(p, lag)
        if path.exists():
            out[(p, int(lag))] = read_lag_dataset(path, p)
    return out


@dataclass
class BenchmarkRun:
    grid: BenchmarkGrid
    results: list[BenchmarkResult]
    data_digests: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    alpha: float = 0.8

    @property
    def failures(self) -> list[BenchmarkResult]:
        return [r for r in self.results if not r.ok]

    def manifest(self) -> dict:
        """Everything needed to reproduce the run; free of timestamps and timings."""
        return {
            "package": "aqiforecast",
            "version": __version__,
            "kernel_backend": backend(),
            "grid": self.grid.to_dict(),
            "seeds": list(self.grid.seeds),
            "alpha": self.alpha,
            "overrides": self.overrides,
            "data": dict(sorted(self.data_digests.items())),
            "cells": len(self.results),
            "failed_cells": [r.cell.name for r in self.failures],
        }


def run_benchmark(grid: BenchmarkGrid, data: Mapping | str | Path,
                  seeds: Sequence[int] | None = None, jobs: int = 1,
                  overrides: Mapping | None = None, alpha: float = 0.8,
                  artifacts_dir: str | Path | None = None,
                  tables: Mapping | None = None) -> BenchmarkRun:
    """Run every cell of ``grid`` on ``data``.

    ``data`` maps ``(pollutant, lag)`` to a :class:`LagDataset`, or names a
    directory of lag files. ``seeds`` replaces the grid's seeds when given.
    ``tables`` maps pollutants to breakpoint tables replacing the shipped ones.
    """
    if seeds is not None:
        grid = BenchmarkGrid(grid.pollutants, grid.lags, grid.families, grid.lambda_grid,
                             tuple(seeds))
    if not isinstance(data, Mapping):
        data = load_datasets(data, grid.pollutants, grid.lags)
    data = {(Pollutant.parse(p), int(lag)): ds for (p, lag), ds in data.items()}
    overrides = dict(overrides or {})
    tables = {Pollutant.parse(p): t for p, t in (tables or {}).items()}
    cells = grid.cells()

    digests = {}
    jobs_args, results = [], []
    for cell in cells:
        ds = data.get((cell.pollutant, cell.lag))
        if ds is None:
            results.append(_missing(cell, f"no lag dataset for {cell.pollutant.value} "
                                          f"lag {cell.lag}"))
            continue
        digests[lag_filename(cell.pollutant, cell.lag)] = dataset_digest(ds)
        jobs_args.append((cell, ds, overrides, alpha, artifacts_dir, tables.get(cell.pollutant)))

    if jobs <= 1 or len(jobs_args) <= 1:
        results += [_job(a) for a in jobs_args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results += list(pool.map(_job, jobs_args, chunksize=1))
    results.sort(key=lambda r: r.cell.sort_key)
    return BenchmarkRun(grid, results, digests, overrides, alpha)
