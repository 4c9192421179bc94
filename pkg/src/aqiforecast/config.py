"""The run configuration file and its validation.

A YAML document such as::

    data:
      PM25: {2022: raw/pm25_2022.csv, 2023: raw/pm25_2023.csv}
      O3: [raw/o3_2022.csv, raw/o3_2023.csv]
    pollutants: [PM25, O3]
    lags: [1, 7, 14, 30]
    families: [LR, SARIMAX, MLP, MLP_PHYS, LSTM, LSTM_PHYS]
    lambda_grid: [[0, 1], [0.3, 0.7], [0.5, 0.5], [0.7, 0.3], [1, 0]]
    hyperparameters: {all: {}, MLP: {epochs: 500}}
    seeds: [0]
    output_dir: out

Relative paths resolve against the config file's directory. Validation
collects every problem before failing, so a bad file is reported in one go.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .eval.benchmark import resolve_overrides
from .ingest import DEFAULT_COLUMNS, Pollutant
from .models import DEFAULT_LAMBDA_GRID, Family, ModelSpec
from .physics import BreakpointError, load_breakpoint_table

OUT_ENV = "AQIFORECAST_OUT"
DEFAULT_OUT = "aqiforecast-out"
_KEYS = {
    "data", "column_map", "date_format", "pollutants", "lags", "families", "lambda_grid",
    "hyperparameters", "seeds", "output_dir", "alpha", "breakpoints",
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class RunConfig:
    data: dict = field(default_factory=dict)  # Pollutant -> list[Path]
    column_map: dict = field(default_factory=dict)  # Pollutant -> {role: column}
    date_format: str | None = None
    pollutants: tuple = tuple(Pollutant)
    lags: tuple = (1, 7, 14, 30)
    families: tuple = tuple(Family)
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    hyperparameters: dict = field(default_factory=dict)
    seeds: tuple = (0,)
    output_dir: Path = Path(DEFAULT_OUT)
    alpha: float = 0.8
    breakpoints: dict = field(default_factory=dict)  # Pollutant -> Path

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "data": {p.value: [str(x) for x in v] for p, v in self.data.items()},
            "pollutants": [p.value for p in self.pollutants],
            "lags": list(self.lags),
            "families": [f.value for f in self.families],
            "lambda_grid": [list(r) for r in self.lambda_grid],
            "hyperparameters": self.hyperparameters,
            "seeds": list(self.seeds),
            "output_dir": str(self.output_dir),
            "alpha": self.alpha,
        }


def _int_list(value, name: str, errors: list[str], minimum: int | None = None) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        errors.append(f"{name}: expected a non-empty list")
        return ()
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int):
            errors.append(f"{name}: {v!r} is not an integer")
        elif minimum is not None and v < minimum:
            errors.append(f"{name}: {v} is below the minimum {minimum}")
        else:
            out.append(v)
    return tuple(out)


def _enum_list(value, name: str, parse, errors: list[str]) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        errors.append(f"{name}: expected a non-empty list")
        return ()
    out = []
    for v in value:
        try:
            out.append(parse(v))
        except ValueError as exc:
            errors.append(f"{name}: {exc}")
    return tuple(dict.fromkeys(out))


def _path(base: Path, value) -> Path:
    p = Path(str(value)).expanduser()
    return p if p.is_absolute() else base / p


def parse_config(raw: Mapping[str, Any] | None, base_dir: str | Path = ".",
                 check_paths: bool = True) -> RunConfig:
    """Validate a loaded mapping; raises :class:`ConfigError` listing every problem."""
    raw = dict(raw or {})
    base = Path(base_dir)
    errors: list[str] = []
    kw: dict[str, Any] = {}

    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        errors.append(f"unknown key(s): {', '.join(map(str, unknown))}")

    if "pollutants" in raw:
        kw["pollutants"] = _enum_list(raw["pollutants"], "pollutants", Pollutant.parse, errors)
    if "families" in raw:
        kw["families"] = _enum_list(raw["families"], "families", Family.parse, errors)
    if "lags" in raw:
        kw["lags"] = _int_list(raw["lags"], "lags", errors, minimum=1)
    if "seeds" in raw:
        kw["seeds"] = _int_list(raw["seeds"], "seeds", errors, minimum=0)

    if "lambda_grid" in raw:
        rows = []
        grid = raw["lambda_grid"]
        if not isinstance(grid, (list, tuple)) or not grid:
            errors.append("lambda_grid: expected a non-empty list of [lambda_data, lambda_phys]")
            grid = []
        for row in grid:
            if (not isinstance(row, (list, tuple)) or len(row) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                               for v in row)):
                errors.append(f"lambda_grid: row {row!r} is not a pair of numbers")
            elif min(row) < 0:
                errors.append(f"lambda_grid: row {list(row)} has a negative weight")
            elif row[0] == 0 and row[1] == 0:
                errors.append("lambda_grid: row [0, 0] switches off the loss")
            else:
                rows.append((float(row[0]), float(row[1])))
        kw["lambda_grid"] = tuple(rows)

    if "alpha" in raw:
        a = raw["alpha"]
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0 < a < 1:
            errors.append(f"alpha: {a!r} must be a number in (0, 1)")
        else:
            kw["alpha"] = float(a)

    if "date_format" in raw:
        if raw["date_format"] not in (None, "auto", "mdy", "dmy", "iso"):
            errors.append(f"date_format: {raw['date_format']!r} is not one of auto, mdy, dmy, iso")
        else:
            kw["date_format"] = raw["date_format"]

    if "output_dir" in raw:
        kw["output_dir"] = _path(base, raw["output_dir"])

    data: dict = {}
    raw_data = raw.get("data") or {}
    if not isinstance(raw_data, Mapping):
        errors.append("data: expected a mapping of pollutant to files")
        raw_data = {}
    for key, files in raw_data.items():
        try:
            pollutant = Pollutant.parse(key)
        except ValueError as exc:
            errors.append(f"data: {exc}")
            continue
        if isinstance(files, Mapping):
            files = [files[k] for k in sorted(files, key=str)]
        if isinstance(files, (str, Path)):
            files = [files]
        if not isinstance(files, (list, tuple)) or not files:
            errors.append(f"data.{pollutant.value}: expected one or more file paths")
            continue
        paths = [_path(base, f) for f in files]
        if check_paths:
            errors += [f"data.{pollutant.value}: file not found: {p}" for p in paths
                       if not p.is_file()]
        data[pollutant] = paths
    kw["data"] = data

    column_map: dict = {}
    raw_cols = raw.get("column_map") or {}
    if not isinstance(raw_cols, Mapping):
        errors.append("column_map: expected a mapping")
        raw_cols = {}
    for key, mapping in raw_cols.items():
        try:
            pollutant = Pollutant.parse(key)
        except ValueError as exc:
            errors.append(f"column_map: {exc}")
            continue
        if not isinstance(mapping, Mapping):
            errors.append(f"column_map.{pollutant.value}: expected a mapping")
            continue
        bad = sorted(set(mapping) - set(DEFAULT_COLUMNS[pollutant]))
        if bad:
            errors.append(f"column_map.{pollutant.value}: unknown role(s) {', '.join(bad)}; "
                          f"expected {', '.join(DEFAULT_COLUMNS[pollutant])}")
        column_map[pollutant] = {**DEFAULT_COLUMNS[pollutant], **mapping}
    kw["column_map"] = column_map

    breakpoints: dict = {}
    raw_bp = raw.get("breakpoints") or {}
    if not isinstance(raw_bp, Mapping):
        errors.append("breakpoints: expected a mapping of pollutant to YAML file")
        raw_bp = {}
    for key, file in raw_bp.items():
        try:
            pollutant = Pollutant.parse(key)
        except ValueError as exc:
            errors.append(f"breakpoints: {exc}")
            continue
        path = _path(base, file)
        if not path.is_file():
            errors.append(f"breakpoints.{pollutant.value}: file not found: {path}")
            continue
        try:
            table = load_breakpoint_table(path)
        except (BreakpointError, OSError, yaml.YAMLError) as exc:
            errors.append(f"breakpoints.{pollutant.value}: {exc}")
            continue
        if table.pollutant is not pollutant:
            errors.append(f"breakpoints.{pollutant.value}: table is for {table.pollutant.value}")
            continue
        breakpoints[pollutant] = path
    kw["breakpoints"] = breakpoints

    hyper = raw.get("hyperparameters") or {}
    if not isinstance(hyper, Mapping):
        errors.append("hyperparameters: expected a mapping of family (or 'all') to settings")
        hyper = {}
    clean_hyper = {}
    for key, block in hyper.items():
        if key != "all":
            try:
                key = Family.parse(key).value
            except ValueError as exc:
                errors.append(f"hyperparameters: {exc}")
                continue
        if not isinstance(block, Mapping):
            errors.append(f"hyperparameters.{key}: expected a mapping")
            continue
        clean_hyper[key] = dict(block)
    named = {Family.parse(k) for k in clean_hyper if k != "all"}
    checked = set(kw.get("families", tuple(Family))) | named
    # physics blocks inherit from their baseline, so check those too
    checked |= {f for f in Family if f.baseline in named}
    for fam in sorted(checked, key=list(Family).index):
        try:
            ModelSpec.build(fam, resolve_overrides(clean_hyper, fam))
        except (TypeError, ValueError) as exc:
            errors.append(f"hyperparameters.{fam.value}: {exc}")
    kw["hyperparameters"] = clean_hyper

    if errors:
        raise ConfigError(errors)
    return RunConfig(**kw)


def load_config(path: str | Path | None, check_paths: bool = True) -> RunConfig:
    """Read and validate a YAML config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
    if raw is not None and not isinstance(raw, Mapping):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return parse_config(raw, path.parent, check_paths)


def resolve_output_dir(config: RunConfig, flag: str | None = None) -> Path:
    """``--out`` beats the environment variable, which beats the config file."""
    if flag:
        return Path(flag)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(config.output_dir)
