"""Minimal deterministic neural-network engine on numpy arrays."""

from .gradcheck import NonDeterministicClosure, gradcheck
from .layers import (
    Dense,
    Dropout,
    Module,
    Parameter,
    ReLU,
    Sequential,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    relu_backward,
    relu_forward,
)
from .lstm import LSTMLayer, LstmParams, LstmState, init_lstm_params, lstm_cell_backward, lstm_cell_forward
from .networks import LSTMRegressor, MLPRegressor
from .optim import (
    EarlyStopper,
    OptimizerState,
    PlateauScheduler,
    adam_step,
    adamw_step,
    early_stopper,
    optimizer_step,
    plateau_scheduler,
)

__all__ = [
    "Dense", "Dropout", "EarlyStopper", "LSTMLayer", "LSTMRegressor", "LstmParams", "LstmState",
    "MLPRegressor", "Module", "NonDeterministicClosure", "OptimizerState", "Parameter",
    "PlateauScheduler", "ReLU", "Sequential", "adam_step", "adamw_step", "dense_backward",
    "dense_forward", "dropout_backward", "dropout_forward", "early_stopper", "gradcheck",
    "init_lstm_params", "lstm_cell_backward", "lstm_cell_forward", "optimizer_step",
    "plateau_scheduler", "relu_backward", "relu_forward",
]
