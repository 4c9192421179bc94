"""Adam/AdamW, a reduce-on-plateau learning-rate schedule, and early stopping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from .layers import Parameter


@dataclass
class OptimizerState:
    kind: str  # "adam" | "adamw"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: list[Parameter], kind: str = "adam", **kw) -> "OptimizerState":
        kind = kind.lower()
        if kind not in ("adam", "adamw"):
            raise ValueError(f"unknown optimizer {kind!r}")
        if kind == "adamw":
            kw.setdefault("weight_decay", 1e-2)
        state = cls(kind, **kw)
        state.m = [np.zeros_like(p.value) for p in params]
        state.v = [np.zeros_like(p.value) for p in params]
        return state


def _step(params: list[Parameter], state: OptimizerState, decoupled: bool) -> None:
    if len(params) != len(state.m):
        raise ValueError("optimizer state was built for a different parameter list")
    state.step += 1
    for p, m, v in zip(params, state.m, state.v):
        if decoupled:
            kernels.adam_update(p.value, p.grad, m, v, state.lr, state.beta1, state.beta2,
                                state.eps, state.weight_decay, state.step)
        else:
            g = p.grad + state.weight_decay * p.value if state.weight_decay else p.grad
            kernels.adam_update(p.value, g, m, v, state.lr, state.beta1, state.beta2,
                                state.eps, 0.0, state.step)


def adam_step(params: list[Parameter], state: OptimizerState) -> None:
    """Adam; a non-zero ``weight_decay`` is added to the gradient (L2)."""
    _step(params, state, decoupled=False)


def adamw_step(params: list[Parameter], state: OptimizerState) -> None:
    """AdamW; weight decay shrinks the values directly, not the gradients."""
    _step(params, state, decoupled=True)


def optimizer_step(params: list[Parameter], state: OptimizerState) -> None:
    (adamw_step if state.kind == "adamw" else adam_step)(params, state)


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` once more than ``patience``
    consecutive epochs fail to improve on the best loss by ``min_delta``."""

    optimizer: OptimizerState
    factor: float = 0.5
    patience: int = 10
    min_delta: float = 1e-6
    min_lr: float = 0.0
    best: float = math.inf
    bad_epochs: int = 0
    reductions: int = 0

    def step(self, val_loss: float) -> float:
        if not math.isfinite(val_loss):
            raise ValueError(f"non-finite validation loss {val_loss}")
        if val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs > self.patience:
                self.optimizer.lr = max(self.optimizer.lr * self.factor, self.min_lr)
                self.reductions += 1
                self.bad_epochs = 0
        return self.optimizer.lr


@dataclass
class EarlyStopper:
    """Stop after ``patience`` consecutive non-improving epochs and keep a
    copy of the best parameters seen."""

    patience: int = 20
    min_delta: float = 1e-6
    best: float = math.inf
    best_epoch: int = 0
    bad_epochs: int = 0
    epoch: int = 0
    snapshot: list = field(default_factory=list)

    def step(self, val_loss: float, params: list[Parameter]) -> bool:
        """Record one epoch; returns ``True`` while training should continue."""
        if not math.isfinite(val_loss):
            raise ValueError(f"non-finite validation loss {val_loss}")
        self.epoch += 1
        if val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.best_epoch = self.epoch
            self.bad_epochs = 0
            self.snapshot = [p.value.copy() for p in params]
        else:
            self.bad_epochs += 1
        return self.bad_epochs < self.patience

    def restore(self, params: list[Parameter]) -> None:
        if not self.snapshot:
            return
        for p, saved in zip(params, self.snapshot):
            p.value[...] = saved


def plateau_scheduler(state: PlateauScheduler, val_loss: float) -> float:
    return state.step(val_loss)


def early_stopper(state: EarlyStopper, val_loss: float, params: list[Parameter]) -> bool:
    return state.step(val_loss, params)
