"""Ordinary least squares on ``[1, concentration, aqi]``."""

from __future__ import annotations

import numpy as np

from ..lagged import LagDataset, SplitDataset
from .spec import Family, FittedModel, ModelSpec


class RankDeficientError(ValueError):
    pass


def design_matrix(ds: LagDataset) -> np.ndarray:
    return np.column_stack([np.ones(len(ds)), ds.x_conc, ds.x_aqi])


def solve_least_squares(X: np.ndarray, y: np.ndarray, rcond: float = 1e-10) -> np.ndarray:
    """Least-squares coefficients through a reduced QR factorization."""
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.size < X.shape[1] or diag.min() <= rcond * diag.max():
        raise RankDeficientError(
            f"design matrix is rank deficient (|diag R| = {np.array2string(diag, precision=3)})"
        )
    return np.linalg.solve(r, q.T @ y)


def fit_ols(split: SplitDataset, spec: ModelSpec | None = None) -> FittedModel:
    spec = spec or ModelSpec(Family.LR)
    train = split.train
    if len(train) < 3:
        raise ValueError(f"OLS needs at least 3 training rows, got {len(train)}")
    beta = solve_least_squares(design_matrix(train), train.y)
    return FittedModel(spec, train.pollutant, train.lag, {"beta": beta})


def predict_ols(model: FittedModel, rows: LagDataset) -> np.ndarray:
    return design_matrix(rows) @ model.params["beta"]
