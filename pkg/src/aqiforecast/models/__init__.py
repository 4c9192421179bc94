"""The six model families behind one ``fit``/``predict`` pair."""

from __future__ import annotations

import numpy as np

from ..ingest import Pollutant
from ..lagged import LagDataset, SplitDataset
from ..physics import BreakpointTable
from .neural import (
    TrainingDivergedError,
    build_network,
    predict_neural,
    train_lstm,
    train_mlp,
    train_neural,
    train_physics_variant,
)
from .ols import RankDeficientError, design_matrix, fit_ols, predict_ols, solve_least_squares
from .sarimax import (
    SarimaxFitError,
    SarimaxParams,
    daily_calendar,
    fit_sarimax,
    fit_sarimax_arrays,
    predict_sarimax,
    residuals,
    sarimax_params,
)
from .serialize import load_checkpoint, loads, dumps, save_checkpoint
from .spec import (
    DEFAULT_LAMBDA_GRID,
    Family,
    FittedModel,
    Hyperparams,
    ModelSpec,
    default_hyperparams,
)


def fit(split: SplitDataset, spec: ModelSpec, table: BreakpointTable | None = None) -> FittedModel:
    if spec.family is Family.LR:
        return fit_ols(split, spec)
    if spec.family is Family.SARIMAX:
        return fit_sarimax(split, spec)
    return train_neural(split, spec, table)


def predict(model: FittedModel, rows: LagDataset) -> np.ndarray:
    """Real-unit AQI predictions for ``rows`` in input order."""
    if Pollutant.parse(rows.pollutant) is not model.pollutant:
        raise ValueError(f"model was fitted on {model.pollutant.value}, "
                         f"rows are {rows.pollutant.value}")
    if len(rows) == 0:
        return np.empty(0)
    if model.spec.family is Family.LR:
        pred = predict_ols(model, rows)
    elif model.spec.family is Family.SARIMAX:
        pred = predict_sarimax(model, rows)
    else:
        pred = predict_neural(model, rows)
    return np.asarray(pred, dtype=np.float64)


__all__ = [
    "Family", "FittedModel", "Hyperparams", "ModelSpec", "DEFAULT_LAMBDA_GRID",
    "RankDeficientError", "SarimaxFitError", "SarimaxParams", "TrainingDivergedError",
    "build_network", "daily_calendar", "default_hyperparams", "design_matrix", "dumps", "fit",
    "fit_ols", "fit_sarimax", "fit_sarimax_arrays", "load_checkpoint", "loads", "predict",
    "predict_neural", "predict_ols", "predict_sarimax", "residuals", "sarimax_params",
    "save_checkpoint", "solve_least_squares", "train_lstm", "train_mlp", "train_neural",
    "train_physics_variant",
]
