"""EPA breakpoint tables, the piecewise-linear AQI map, and the loss terms."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .ingest import Pollutant

AQI_CAP = 500


class BreakpointError(ValueError):
    pass


@dataclass(frozen=True)
class BreakpointSegment:
    c_lo: Decimal
    c_hi: Decimal
    i_lo: int
    i_hi: int


@dataclass(frozen=True, eq=False)
class BreakpointTable:
    pollutant: Pollutant
    segments: tuple[BreakpointSegment, ...]
    truncation: int | None
    aqi_cap: int = AQI_CAP
    version: str = ""

    def __post_init__(self):
        c_lo = np.array([float(s.c_lo) for s in self.segments])
        c_hi = np.array([float(s.c_hi) for s in self.segments])
        i_lo = np.array([float(s.i_lo) for s in self.segments])
        i_hi = np.array([float(s.i_hi) for s in self.segments])
        for arr in (c_lo, c_hi, i_lo, i_hi):
            arr.setflags(write=False)
        object.__setattr__(self, "_arrays", (c_lo, c_hi, i_lo, i_hi))

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Float copies of ``(c_lo, c_hi, i_lo, i_hi)``."""
        return self._arrays

    def to_dict(self) -> dict:
        return {
            "pollutant": self.pollutant.value,
            "version": self.version,
            "truncation": self.truncation,
            "aqi_cap": self.aqi_cap,
            "segments": [[str(s.c_lo), str(s.c_hi), s.i_lo, s.i_hi] for s in self.segments],
        }


def _decimal(value, where: str) -> Decimal:
    try:
        # str() keeps YAML/JSON numbers at their shortest repr instead of
        # expanding the binary float.
        return Decimal(str(value).strip())
    except (InvalidOperation, ValueError):
        raise BreakpointError(f"{where}: {value!r} is not a number") from None


def load_breakpoint_table(source: Mapping | str | Path) -> BreakpointTable:
    """Build a validated table from a mapping or a YAML/JSON file.

    Consecutive segments must either share both endpoints or step by exactly
    one truncation unit in concentration and one index point.
    """
    if not isinstance(source, Mapping):
        with open(source, encoding="utf-8") as fh:
            source = yaml.safe_load(fh)
        if not isinstance(source, Mapping):
            raise BreakpointError("breakpoint config must be a mapping")
    if "pollutant" not in source:
        raise BreakpointError("breakpoint config is missing 'pollutant'")
    if "segments" not in source or not source["segments"]:
        raise BreakpointError("breakpoint config has no segments")
    pollutant = Pollutant.parse(source["pollutant"])
    truncation = source.get("truncation")
    if truncation is not None:
        truncation = int(truncation)
        if truncation < 0:
            raise BreakpointError("truncation must be >= 0")
    cap = int(source.get("aqi_cap", AQI_CAP))
    if cap != AQI_CAP:
        raise BreakpointError(f"aqi_cap must be {AQI_CAP}, got {cap}")

    segments = []
    for k, raw in enumerate(source["segments"]):
        if isinstance(raw, Mapping):
            raw = [raw.get("c_lo"), raw.get("c_hi"), raw.get("i_lo"), raw.get("i_hi")]
        if len(raw) != 4 or any(v is None for v in raw):
            raise BreakpointError(f"segment {k} must have c_lo, c_hi, i_lo, i_hi")
        c_lo, c_hi = _decimal(raw[0], f"segment {k} c_lo"), _decimal(raw[1], f"segment {k} c_hi")
        i_lo, i_hi = _decimal(raw[2], f"segment {k} i_lo"), _decimal(raw[3], f"segment {k} i_hi")
        if i_lo != i_lo.to_integral_value() or i_hi != i_hi.to_integral_value():
            raise BreakpointError(f"segment {k}: index points must be integers")
        if not c_lo < c_hi:
            raise BreakpointError(f"segment {k}: c_lo {c_lo} must be < c_hi {c_hi}")
        if not i_lo < i_hi:
            raise BreakpointError(f"segment {k}: i_lo {i_lo} must be < i_hi {i_hi}")
        segments.append(BreakpointSegment(c_lo, c_hi, int(i_lo), int(i_hi)))

    if segments[0].c_lo != 0 or segments[0].i_lo != 0:
        raise BreakpointError("first segment must start at concentration 0 and index 0")
    if segments[-1].i_hi != cap:
        raise BreakpointError(f"last segment must end at index {cap}")
    unit = Decimal(1).scaleb(-truncation) if truncation is not None else None
    for k in range(1, len(segments)):
        prev, cur = segments[k - 1], segments[k]
        pair = f"segments {k - 1} and {k} ({prev.c_lo}-{prev.c_hi}, {cur.c_lo}-{cur.c_hi})"
        step = cur.c_lo - prev.c_hi
        if step < 0 or (step == 0 and cur.i_lo != prev.i_hi):
            raise BreakpointError(f"overlapping {pair}")
        if step == 0:
            continue
        if unit is None or step != unit:
            raise BreakpointError(f"gapped {pair}: concentration step {step}")
        if cur.i_lo != prev.i_hi + 1:
            raise BreakpointError(f"{pair} are not contiguous in index space")
    return BreakpointTable(pollutant, tuple(segments), truncation, cap, str(source.get("version", "")))


@lru_cache(maxsize=None)
def default_table(pollutant: Pollutant | str) -> BreakpointTable:
    """The breakpoint table shipped with the package for ``pollutant``."""
    pollutant = Pollutant.parse(pollutant)
    name = {Pollutant.PM25: "pm25.yaml", Pollutant.O3: "o3.yaml"}[pollutant]
    with resources.files("aqiforecast.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return load_breakpoint_table(yaml.safe_load(fh))


def truncate(conc: np.ndarray, digits: int | None) -> np.ndarray:
    """Truncate toward zero to ``digits`` decimals.

    The scaled value is rounded to 6 places before flooring so binary
    representation error (``0.29 * 100 = 28.999...``) does not drop a unit.
    """
    conc = np.asarray(conc, dtype=np.float64)
    if digits is None:
        return conc
    scale = 10.0 ** digits
    return np.floor(np.round(conc * scale, 6)) / scale


def compute_aqi_array(conc, table: BreakpointTable) -> np.ndarray:
    """Vectorised piecewise-linear AQI with truncation and the 500 cap.

    A concentration between two truncation-separated segments (only
    reachable without truncation) uses the higher segment.
    """
    conc = np.asarray(conc, dtype=np.float64)
    if np.any(conc < 0) or np.any(np.isnan(conc)):
        raise ValueError("concentrations must be non-negative")
    c = truncate(conc, table.truncation)
    c_lo, c_hi, i_lo, i_hi = table.arrays
    k = np.searchsorted(c_hi, c, side="left")
    above = k >= len(c_hi)
    k = np.minimum(k, len(c_hi) - 1)
    frac = (c - c_lo[k]) / (c_hi[k] - c_lo[k])
    out = i_lo[k] + (i_hi[k] - i_lo[k]) * frac
    out = np.where(above, float(table.aqi_cap), out)
    return np.clip(out, 0.0, float(table.aqi_cap))


def compute_aqi(conc: float, table: BreakpointTable) -> float:
    if conc < 0:
        raise ValueError(f"negative concentration {conc}")
    return float(compute_aqi_array(np.array([conc]), table)[0])


@dataclass(frozen=True)
class LossWeights:
    lambda_data: float = 1.0
    lambda_phys: float = 0.0

    def __post_init__(self):
        if self.lambda_data < 0 or self.lambda_phys < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lambda_data == 0 and self.lambda_phys == 0:
            raise ValueError("loss weights cannot both be zero")

    @property
    def uses_physics(self) -> bool:
        return self.lambda_phys != 0


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty input")
    return a, b


def data_loss(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def physics_reference(conc, table: BreakpointTable, target_scaler=None) -> np.ndarray:
    """Breakpoint AQI for each concentration, mapped into the model's target space."""
    ref = compute_aqi_array(conc, table)
    if target_scaler is not None:
        ref = target_scaler.transform(ref)
    return ref


def physics_loss(pred, conc, table: BreakpointTable, target_scaler=None) -> float:
    """Mean squared gap between predictions and the breakpoint AQI.

    ``conc`` is in real pollutant units. Pass ``target_scaler`` when ``pred``
    lives in a scaled target space.
    """
    pred, conc = _pair(pred, conc)
    return data_loss(pred, physics_reference(conc, table, target_scaler))


def total_loss(ld: float, lp: float, w: LossWeights) -> float:
    return w.lambda_data * ld + w.lambda_phys * lp
