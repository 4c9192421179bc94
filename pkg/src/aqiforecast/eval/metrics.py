"""Point-forecast error metrics in AQI units."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


def _pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=np.float64).ravel()
    p = np.asarray(pred, dtype=np.float64).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: truth has {t.size} values, prediction {p.size}")
    if t.size == 0:
        raise ValueError("metrics need at least one value")
    return t, p


def _variance(t: np.ndarray) -> float:
    var = float(np.mean((t - t.mean()) ** 2))
    if not var > 0.0:
        raise ValueError("truth has zero variance; NMSE and R2 are undefined")
    return var


def mae(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return float(np.mean(np.abs(t - p)))


def mse(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return float(np.mean((t - p) ** 2))


def rmse(truth, pred) -> float:
    return math.sqrt(mse(truth, pred))


def nmse(truth, pred) -> float:
    """MSE divided by the population variance of ``truth``."""
    t, p = _pair(truth, pred)
    return float(np.mean((t - p) ** 2)) / _variance(t)


def r2(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return 1.0 - float(np.mean((t - p) ** 2)) / _variance(t)


@dataclass(frozen=True)
class MetricBundle:
    mae: float
    mse: float
    rmse: float
    nmse: float
    r2: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_metrics(truth, pred) -> MetricBundle:
    """All metrics at once; nmse/r2 are NaN when ``truth`` is constant."""
    t, p = _pair(truth, pred)
    m = float(np.mean((t - p) ** 2))
    var = float(np.mean((t - t.mean()) ** 2))
    ratio = m / var if var > 0 else math.nan
    return MetricBundle(float(np.mean(np.abs(t - p))), m, math.sqrt(m), ratio, 1.0 - ratio)
