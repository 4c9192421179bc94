"""Horizon-specific supervised datasets, chronological splits and scalers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import DailySeries, Pollutant


@dataclass(frozen=True, eq=False)
class LagDataset:
    """Rows pairing day ``t`` features with the AQI ``lag`` positions later.

    ``target_dates[i]`` is the date of the series row that supplied ``y[i]``;
    it equals ``dates[i] + lag`` days only when the series has no gaps.
    """

    pollutant: Pollutant
    lag: int
    dates: np.ndarray
    target_dates: np.ndarray
    x_conc: np.ndarray
    x_aqi: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pollutant", Pollutant.parse(self.pollutant))
        arrays = {
            "dates": np.asarray(self.dates, dtype="datetime64[D]"),
            "target_dates": np.asarray(self.target_dates, dtype="datetime64[D]"),
            "x_conc": np.asarray(self.x_conc, dtype=np.float64),
            "x_aqi": np.asarray(self.x_aqi, dtype=np.float64),
            "y": np.asarray(self.y, dtype=np.float64),
        }
        n = arrays["dates"].shape[0]
        for name, arr in arrays.items():
            if arr.shape != (n,):
                raise ValueError(f"column {name} has shape {arr.shape}, expected ({n},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        if not np.all(np.isfinite(arrays["y"])):
            raise ValueError("lag dataset has missing targets")

    def __len__(self) -> int:
        return int(self.dates.shape[0])

    def take(self, rows: slice | np.ndarray) -> "LagDataset":
        return LagDataset(
            self.pollutant,
            self.lag,
            self.dates[rows],
            self.target_dates[rows],
            self.x_conc[rows],
            self.x_aqi[rows],
            self.y[rows],
        )

    @property
    def features(self) -> np.ndarray:
        """(n, 2) matrix of ``[concentration, aqi]``."""
        return np.column_stack([self.x_conc, self.x_aqi])

    def with_values(self, **columns) -> "LagDataset":
        fields = {
            "dates": self.dates,
            "target_dates": self.target_dates,
            "x_conc": self.x_conc,
            "x_aqi": self.x_aqi,
            "y": self.y,
        }
        fields.update(columns)
        return LagDataset(self.pollutant, self.lag, **fields)


def build_lag_dataset(series: DailySeries, lag: int) -> LagDataset:
    """Pair row ``i`` features with the AQI of row ``i + lag`` (positional)."""
    if not isinstance(lag, (int, np.integer)) or lag < 1:
        raise ValueError(f"lag must be a positive integer, got {lag!r}")
    n = len(series)
    if lag >= n:
        raise ValueError(f"lag {lag} >= series length {n}")
    m = n - lag
    return LagDataset(
        series.pollutant,
        int(lag),
        series.dates[:m],
        series.dates[lag:],
        series.concentration[:m],
        series.aqi[:m],
        series.aqi[lag:],
    )


@dataclass(frozen=True, eq=False)
class SplitDataset:
    train: LagDataset
    test: LagDataset
    alpha: float

    @property
    def full(self) -> LagDataset:
        return concat_rows(self.train, self.test)


def concat_rows(a: LagDataset, b: LagDataset) -> LagDataset:
    if a.pollutant != b.pollutant or a.lag != b.lag:
        raise ValueError("cannot concatenate datasets of different pollutant/lag")
    return LagDataset(
        a.pollutant,
        a.lag,
        np.concatenate([a.dates, b.dates]),
        np.concatenate([a.target_dates, b.target_dates]),
        np.concatenate([a.x_conc, b.x_conc]),
        np.concatenate([a.x_aqi, b.x_aqi]),
        np.concatenate([a.y, b.y]),
    )


def chrono_split(ds: LagDataset, alpha: float = 0.8) -> SplitDataset:
    """First ``floor(alpha * n)`` rows train, the rest test; no shuffling."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    n = len(ds)
    if n < 2:
        raise ValueError("need at least two rows to split")
    cut = math.floor(alpha * n)
    if cut == 0 or cut == n:
        raise ValueError(f"alpha={alpha} on {n} rows leaves an empty train or test set")
    return SplitDataset(ds.take(slice(0, cut)), ds.take(slice(cut, n)), alpha)


# ---------------------------------------------------------------------------
# Scalers
# ---------------------------------------------------------------------------


class ScalerKind(str, Enum):
    STANDARD = "standard"
    MINMAX = "minmax"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-column affine scaler fitted on training rows.

    ``center``/``spread`` hold mean/std for ``STANDARD`` and min/(max-min)
    for ``MINMAX``; ``feature_range`` is only used by ``MINMAX``.
    """

    kind: ScalerKind
    columns: tuple[str, ...]
    center: np.ndarray
    spread: np.ndarray
    feature_range: tuple[float, float] = (-1.0, 1.0)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        width = x.shape[-1] if x.ndim == 2 else 1
        if width != len(self.columns):
            raise ValueError(f"scaler fitted on {len(self.columns)} columns, got {width}")
        return x

    def transform(self, x):
        x = self._check(x)
        center, spread = self._broadcast(x)
        if self.kind is ScalerKind.IDENTITY:
            return x.copy()
        if self.kind is ScalerKind.STANDARD:
            return (x - center) / spread
        lo, hi = self.feature_range
        return lo + (x - center) * ((hi - lo) / spread)

    def inverse_transform(self, x):
        x = self._check(x)
        center, spread = self._broadcast(x)
        if self.kind is ScalerKind.IDENTITY:
            return x.copy()
        if self.kind is ScalerKind.STANDARD:
            return x * spread + center
        lo, hi = self.feature_range
        return center + (x - lo) * (spread / (hi - lo))

    def _broadcast(self, x):
        if x.ndim == 2:
            return self.center, self.spread
        return self.center[0], self.spread[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "columns": list(self.columns),
            "center": [float(v) for v in self.center],
            "spread": [float(v) for v in self.spread],
            "feature_range": list(self.feature_range),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(
            ScalerKind(d["kind"]),
            tuple(d["columns"]),
            np.array(d["center"], dtype=np.float64),
            np.array(d["spread"], dtype=np.float64),
            tuple(d["feature_range"]),
        )


def fit_scaler(
    train: np.ndarray,
    kind: ScalerKind | str,
    columns: Sequence[str] | None = None,
    feature_range: tuple[float, float] = (-1.0, 1.0),
) -> Scaler:
    """Fit per-column statistics on training rows only.

    Standard uses the population standard deviation. A zero-variance column
    (Standard) or a constant column (MinMax) is rejected by name.
    """
    kind = ScalerKind(kind)
    x = np.asarray(train, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("fit_scaler needs a non-empty 1-D or 2-D array")
    if columns is None:
        columns = [f"col{k}" for k in range(x.shape[1])]
    columns = tuple(columns)
    if len(columns) != x.shape[1]:
        raise ValueError("column names do not match array width")
    lo, hi = (float(feature_range[0]), float(feature_range[1]))
    if kind is ScalerKind.MINMAX and not lo < hi:
        raise ValueError("feature_range must satisfy lo < hi")

    if kind is ScalerKind.IDENTITY:
        center, spread = np.zeros(x.shape[1]), np.ones(x.shape[1])
    elif kind is ScalerKind.STANDARD:
        center = x.mean(axis=0)
        spread = x.std(axis=0)
        bad = [c for c, s in zip(columns, spread) if not s > 0]
        if bad:
            raise ValueError(f"zero-variance column(s) under standard scaling: {', '.join(bad)}")
    else:
        center = x.min(axis=0)
        spread = x.max(axis=0) - center
        bad = [c for c, s in zip(columns, spread) if not s > 0]
        if bad:
            raise ValueError(f"constant column(s) under min-max scaling: {', '.join(bad)}")
    return Scaler(kind, columns, center, spread, (lo, hi))


def apply_scaler(scaler: Scaler, rows) -> np.ndarray:
    return scaler.transform(rows)


def invert_scaler(scaler: Scaler, values) -> np.ndarray:
    return scaler.inverse_transform(values)


# ---------------------------------------------------------------------------
# Lag dataset files
# ---------------------------------------------------------------------------


def lag_header(lag: int) -> tuple[str, ...]:
    return ("DATE", "X_CONC", "X_AQI", f"Y_AQI_LAG_{lag}", "TARGET_DATE")


def write_lag_dataset(ds: LagDataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(lag_header(ds.lag))
        for row in zip(ds.dates, ds.x_conc, ds.x_aqi, ds.y, ds.target_dates):
            writer.writerow((str(row[0]), repr(float(row[1])), repr(float(row[2])),
                             repr(float(row[3])), str(row[4])))


def read_lag_dataset(path: str | Path, pollutant: Pollutant | str) -> LagDataset:
    """Read a lag file; the trailing TARGET_DATE column is optional.

    Without it, target dates are taken positionally from the DATE column and
    extended day by day past the last row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r]
    if len(header) < 4 or header[:3] != ["DATE", "X_CONC", "X_AQI"] or not header[3].startswith(
        "Y_AQI_LAG_"
    ):
        raise ValueError(f"{path}: not a lag dataset file (header {header})")
    lag = int(header[3][len("Y_AQI_LAG_"):])
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    if len(header) >= 5 and header[4] == "TARGET_DATE":
        target = np.array([r[4] for r in rows], dtype="datetime64[D]")
    else:
        tail = dates[-1] + np.arange(1, lag + 1) if len(dates) else dates
        target = np.concatenate([dates[lag:], tail])[: len(dates)]
    return LagDataset(
        pollutant,
        lag,
        dates,
        target,
        np.array([float(r[1]) for r in rows]),
        np.array([float(r[2]) for r in rows]),
        np.array([float(r[3]) for r in rows]),
    )


def lag_filename(pollutant: Pollutant | str, lag: int) -> str:
    return f"{Pollutant.parse(pollutant).value}_LAG_{int(lag)}.csv"
