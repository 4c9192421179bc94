"""Model families, hyperparameters and fitted-model containers."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from ..ingest import Pollutant
from ..lagged import Scaler, ScalerKind
from ..physics import LossWeights


class Family(str, Enum):
    LR = "LR"
    SARIMAX = "SARIMAX"
    MLP = "MLP"
    MLP_PHYS = "MLP_PHYS"
    LSTM = "LSTM"
    LSTM_PHYS = "LSTM_PHYS"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().upper().replace("+PHYSICS", "_PHYS").replace("+PHYS", "_PHYS")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown model family {value!r}") from None

    @property
    def is_physics(self) -> bool:
        return self in (Family.MLP_PHYS, Family.LSTM_PHYS)

    @property
    def is_neural(self) -> bool:
        return self in (Family.MLP, Family.MLP_PHYS, Family.LSTM, Family.LSTM_PHYS)

    @property
    def baseline(self) -> "Family":
        return {Family.MLP_PHYS: Family.MLP, Family.LSTM_PHYS: Family.LSTM}.get(self, self)

    @property
    def label(self) -> str:
        return {Family.MLP_PHYS: "MLP+Physics", Family.LSTM_PHYS: "LSTM+Physics"}.get(self, self.value)


DEFAULT_LAMBDA_GRID = ((0.0, 1.0), (0.3, 0.7), (0.5, 0.5), (0.7, 0.3), (1.0, 0.0))


@dataclass(frozen=True)
class Hyperparams:
    """Every tunable setting of every family; each family reads its own subset."""

    # networks
    hidden: tuple[int, ...] = (64, 32)
    lstm_hidden: tuple[int, ...] = (32, 32)
    head: tuple[int, ...] = (128, 64, 32)
    dropout: float = 0.1
    optimizer: str = "adamw"
    lr: float = 1e-3
    weight_decay: float | None = None  # None -> optimizer default (AdamW 0.01, Adam 0)
    batch_size: int | None = None  # None -> full batch
    scaler: ScalerKind = ScalerKind.STANDARD
    scale_target: bool = False
    epochs: int = 500
    early_stopping: bool = False
    patience: int = 20
    sched_patience: int = 10
    sched_factor: float = 0.5
    min_delta: float = 1e-6
    val_fraction: float = 0.1
    # SARIMAX
    period: int = 7
    sarimax_forecast: str = "one_step"  # or "recursive"
    sarimax_scale_exog: bool = False
    sarimax_max_iter: int = 500
    sarimax_reduce_common_factors: bool = True

    def __post_init__(self):
        try:
            for name in _FLOAT_FIELDS:
                object.__setattr__(self, name, float(getattr(self, name)))
            for name in _INT_FIELDS:
                value = getattr(self, name)
                if value is not None:
                    if isinstance(value, float) and not value.is_integer():
                        raise ValueError(f"{name} must be an integer, got {value}")
                    object.__setattr__(self, name, int(value))
            if self.weight_decay is not None:
                object.__setattr__(self, "weight_decay", float(self.weight_decay))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad hyperparameter value: {exc}") from None
        object.__setattr__(self, "scaler", ScalerKind(self.scaler))
        for name in ("hidden", "lstm_hidden", "head"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if self.sarimax_forecast not in ("one_step", "recursive"):
            raise ValueError("sarimax_forecast must be 'one_step' or 'recursive'")
        if self.optimizer.lower() not in ("adam", "adamw"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1 or self.lr <= 0:
            raise ValueError("epochs and lr must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.period < 2 or self.patience < 1 or self.sched_patience < 0:
            raise ValueError("period must be >= 2, patience >= 1, sched_patience >= 0")
        if not 0.0 < self.sched_factor < 1.0:
            raise ValueError("sched_factor must lie in (0, 1)")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")

    def replace(self, **overrides) -> "Hyperparams":
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError(f"unknown hyperparameter(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scaler"] = self.scaler.value
        for name in ("hidden", "lstm_hidden", "head"):
            d[name] = list(d[name])
        return d


_FLOAT_FIELDS = ("dropout", "lr", "min_delta", "val_fraction", "sched_factor")
_INT_FIELDS = ("batch_size", "epochs", "patience", "sched_patience", "period", "sarimax_max_iter")

_TABLE4_SCALER = {
    Family.LR: ScalerKind.IDENTITY,
    Family.SARIMAX: ScalerKind.IDENTITY,
    Family.MLP: ScalerKind.STANDARD,
    Family.MLP_PHYS: ScalerKind.STANDARD,
    Family.LSTM: ScalerKind.MINMAX,
    Family.LSTM_PHYS: ScalerKind.MINMAX,
}


def default_hyperparams(family: Family | str) -> Hyperparams:
    family = Family.parse(family)
    if family in (Family.MLP, Family.MLP_PHYS):
        # MLP+Physics shares the baseline optimizer so that lambda=(1, 0)
        # reproduces the baseline exactly.
        return Hyperparams(optimizer="adamw", epochs=500)
    if family in (Family.LSTM, Family.LSTM_PHYS):
        return Hyperparams(
            optimizer="adam",
            batch_size=32,
            scaler=ScalerKind.MINMAX,
            scale_target=True,
            epochs=1000,
            early_stopping=True,
        )
    return Hyperparams(scaler=ScalerKind.IDENTITY)


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    hyper: Hyperparams = None
    loss_weights: LossWeights = LossWeights(1.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        family = Family.parse(self.family)
        object.__setattr__(self, "family", family)
        if self.hyper is None:
            object.__setattr__(self, "hyper", default_hyperparams(family))
        w = self.loss_weights
        if not isinstance(w, LossWeights):
            w = LossWeights(*w)
            object.__setattr__(self, "loss_weights", w)
        if not family.is_physics and w.lambda_phys != 0:
            raise ValueError(f"{family.value} is not a physics family; lambda_phys must be 0")
        if self.hyper.scaler is not _TABLE4_SCALER[family]:
            raise ValueError(
                f"{family.value} uses {_TABLE4_SCALER[family].value} scaling, "
                f"got {self.hyper.scaler.value}"
            )

    @classmethod
    def build(cls, family: Family | str, overrides: Mapping[str, Any] | None = None,
              loss_weights=(1.0, 0.0), seed: int = 0) -> "ModelSpec":
        hyper = default_hyperparams(family)
        if overrides:
            hyper = hyper.replace(**overrides)
        return cls(Family.parse(family), hyper, LossWeights(*loss_weights), seed)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "hyper": self.hyper.to_dict(),
            "loss_weights": [self.loss_weights.lambda_data, self.loss_weights.lambda_phys],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        hyper = dict(d["hyper"])
        return cls(Family.parse(d["family"]), Hyperparams(**hyper),
                   LossWeights(*d["loss_weights"]), int(d["seed"]))


@dataclass(eq=False)
class FittedModel:
    """Learned state of one model plus what is needed to predict in AQI units.

    ``params`` maps parameter names to arrays (neural, OLS) or scalars
    (SARIMAX). ``history`` holds one dict per training epoch.
    """

    spec: ModelSpec
    pollutant: Pollutant
    lag: int
    params: dict
    scalers: dict[str, Scaler] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    network: Any = field(default=None, repr=False)
