"""Training and prediction for the MLP and LSTM families and their physics variants.

All four share one loop. Per batch the loss is
``lambda_data * mse(pred, y) + lambda_phys * mse(pred, f_aqi(conc))`` in the
model's target space, so the gradient with respect to the predictions is
``(2/N) * (lambda_data * (pred - y) + lambda_phys * (pred - f_aqi))``. With
``lambda_phys == 0`` the physics term is never evaluated inside the update,
which keeps physics-off runs bit-identical to the plain baselines.
"""

from __future__ import annotations

import math

import numpy as np

from ..lagged import LagDataset, Scaler, ScalerKind, SplitDataset, fit_scaler
from ..nn import (
    EarlyStopper,
    LSTMRegressor,
    MLPRegressor,
    OptimizerState,
    PlateauScheduler,
    optimizer_step,
)
from ..physics import BreakpointTable, default_table, physics_reference, total_loss
from .spec import Family, FittedModel, ModelSpec

FEATURE_COLUMNS = ("X_CONC", "X_AQI")


class TrainingDivergedError(FloatingPointError):
    pass


def build_network(spec: ModelSpec, n_in: int = 2):
    """Freshly initialized network for ``spec``; seeding is fully determined by ``spec.seed``."""
    init_seq, dropout_seq = np.random.SeedSequence(spec.seed).spawn(2)
    init_rng = np.random.default_rng(init_seq)
    hp = spec.hyper
    if spec.family.baseline is Family.MLP:
        return MLPRegressor(n_in, hp.hidden, init_rng)
    if spec.family.baseline is Family.LSTM:
        return LSTMRegressor(n_in, hp.lstm_hidden, hp.head, hp.dropout, init_rng,
                             np.random.default_rng(dropout_seq))
    raise ValueError(f"{spec.family.value} is not a neural family")


def _inputs(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    return x[:, None, :] if spec.family.baseline is Family.LSTM else x


def _resolve_table(spec: ModelSpec, pollutant, table: BreakpointTable | None):
    if table is not None:
        if table.pollutant != pollutant:
            raise ValueError(f"breakpoint table is for {table.pollutant.value}, "
                             f"data is {pollutant.value}")
        return table
    try:
        return default_table(pollutant)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        if spec.family.is_physics:
            raise ValueError(f"no breakpoint table for {pollutant.value}: {exc}") from exc
        return None


def _batches(n: int, size: int | None):
    size = n if size is None else size
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def _losses(pred, y, ref, weights):
    ld = float(np.mean((pred - y) ** 2))
    lp = float(np.mean((pred - ref) ** 2)) if ref is not None else math.nan
    lp_term = lp if weights.uses_physics else 0.0
    return ld, lp, total_loss(ld, lp_term, weights)


def train_neural(split: SplitDataset, spec: ModelSpec,
                 table: BreakpointTable | None = None) -> FittedModel:
    """Fit any of MLP, MLP_PHYS, LSTM, LSTM_PHYS on ``split.train``."""
    if not spec.family.is_neural:
        raise ValueError(f"{spec.family.value} is not a neural family")
    hp = spec.hyper
    weights = spec.loss_weights
    train = split.train
    table = _resolve_table(spec, train.pollutant, table)

    x_scaler = fit_scaler(train.features, hp.scaler, FEATURE_COLUMNS)
    y_scaler = (fit_scaler(train.y, ScalerKind.MINMAX, ("Y",)) if hp.scale_target else None)
    x = _inputs(spec, x_scaler.transform(train.features))
    y = y_scaler.transform(train.y) if y_scaler else train.y.copy()
    ref = physics_reference(train.x_conc, table, y_scaler) if table is not None else None

    n = len(train)
    if hp.early_stopping:
        n_val = max(1, int(round(hp.val_fraction * n)))
        if n - n_val < 1:
            raise ValueError(f"{n} training rows leave nothing to fit after validation hold-out")
    else:
        n_val = 0
    n_fit = n - n_val
    fit_sl, val_sl = slice(0, n_fit), slice(n_fit, n)
    batches = _batches(n_fit, hp.batch_size)

    net = build_network(spec, x.shape[-1])
    params = net.parameters()
    opt_kw = {"lr": hp.lr}
    if hp.weight_decay is not None:
        opt_kw["weight_decay"] = hp.weight_decay
    opt = OptimizerState.for_params(params, hp.optimizer, **opt_kw)
    scheduler = PlateauScheduler(opt, hp.sched_factor, hp.sched_patience, hp.min_delta)
    stopper = EarlyStopper(hp.patience, hp.min_delta)

    history = []
    stopped_early = False
    for epoch in range(1, hp.epochs + 1):
        net.train()
        sum_d = sum_p = 0.0
        for sl in batches:
            net.zero_grad()
            pred = net.forward(x[sl])
            resid = pred - y[sl]
            ld = float(np.mean(resid * resid))
            if ref is not None:
                gap = pred - ref[sl]
                lp = float(np.mean(gap * gap))
            else:
                lp = math.nan
            if weights.uses_physics:
                dpred = (2.0 / resid.size) * (weights.lambda_data * resid
                                              + weights.lambda_phys * gap)
            else:
                dpred = (2.0 / resid.size) * (weights.lambda_data * resid)
            if not (math.isfinite(ld) and np.all(np.isfinite(dpred))):
                raise TrainingDivergedError(
                    f"{spec.family.value} seed={spec.seed}: non-finite loss at epoch {epoch}, "
                    f"rows {sl.start}:{sl.stop}, lr={opt.lr:g}, data loss={ld}, "
                    f"last epoch={history[-1] if history else None}"
                )
            net.backward(dpred)
            optimizer_step(params, opt)
            m = sl.stop - sl.start
            sum_d += ld * m
            sum_p += lp * m
        ld_epoch, lp_epoch = sum_d / n_fit, sum_p / n_fit
        record = {
            "epoch": epoch,
            "data": ld_epoch,
            "phys": lp_epoch,
            "total": total_loss(ld_epoch, lp_epoch if weights.uses_physics else 0.0, weights),
            "lr": opt.lr,
        }
        if n_val:
            net.eval()
            val_pred = net.forward(x[val_sl])
            _, _, val_total = _losses(val_pred, y[val_sl],
                                      None if ref is None else ref[val_sl], weights)
            if not math.isfinite(val_total):
                raise TrainingDivergedError(
                    f"{spec.family.value} seed={spec.seed}: non-finite validation loss "
                    f"at epoch {epoch}"
                )
            record["val"] = val_total
            keep_going = stopper.step(val_total, params)
            scheduler.step(val_total)
        history.append(record)
        if n_val and hp.early_stopping and not keep_going:
            stopped_early = True
            break

    if hp.early_stopping:
        stopper.restore(params)
    net.eval()
    scalers = {"x": x_scaler}
    if y_scaler is not None:
        scalers["y"] = y_scaler
    info = {
        "epochs_run": len(history),
        "stopped_early": stopped_early,
        "best_epoch": stopper.best_epoch if hp.early_stopping else len(history),
        "n_fit": n_fit,
        "n_val": n_val,
        "final_lr": opt.lr,
    }
    return FittedModel(spec, train.pollutant, train.lag,
                       {p.name: p.value.copy() for p in params}, scalers, history, info, net)


def train_mlp(split: SplitDataset, spec: ModelSpec | None = None) -> FittedModel:
    spec = spec or ModelSpec(Family.MLP)
    if spec.family is not Family.MLP:
        raise ValueError("train_mlp expects an MLP spec")
    return train_neural(split, spec)


def train_lstm(split: SplitDataset, spec: ModelSpec | None = None) -> FittedModel:
    spec = spec or ModelSpec(Family.LSTM)
    if spec.family is not Family.LSTM:
        raise ValueError("train_lstm expects an LSTM spec")
    return train_neural(split, spec)


def train_physics_variant(split: SplitDataset, spec: ModelSpec,
                          table: BreakpointTable | None = None) -> FittedModel:
    if not spec.family.is_physics:
        raise ValueError(f"{spec.family.value} is not a physics-guided family")
    return train_neural(split, spec, table)


def network_for(model: FittedModel):
    """The model's network, rebuilt from ``model.params`` if necessary."""
    if model.network is None:
        net = build_network(model.spec)
        for p in net.parameters():
            if p.name not in model.params:
                raise ValueError(f"checkpoint lacks parameter {p.name!r}")
            saved = np.asarray(model.params[p.name], dtype=np.float64)
            if saved.shape != p.value.shape:
                raise ValueError(f"parameter {p.name!r} has shape {saved.shape}, "
                                 f"expected {p.value.shape}")
            p.value[...] = saved
        net.eval()
        model.network = net
    return model.network


def predict_neural(model: FittedModel, rows: LagDataset) -> np.ndarray:
    net = network_for(model)
    net.eval()
    x = _inputs(model.spec, model.scalers["x"].transform(rows.features))
    pred = net.forward(x)
    y_scaler: Scaler | None = model.scalers.get("y")
    return y_scaler.inverse_transform(pred) if y_scaler is not None else pred
