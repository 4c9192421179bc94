"""Checkpoint files: a JSON document that round-trips every float exactly.

Arrays are stored as ``{"__ndarray__": [shape...], "data": [...]}`` with
floats written by ``repr``, which Python parses back to the identical
double.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..ingest import Pollutant
from ..lagged import Scaler
from .spec import FittedModel, ModelSpec

FORMAT = "aqiforecast-checkpoint"
FORMAT_VERSION = 1


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": list(obj.shape), "data": [float(v) for v in obj.reshape(-1)]}
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["data"], dtype=np.float64).reshape(obj["__ndarray__"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def model_to_dict(model: FittedModel) -> dict:
    return {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "package_version": __version__,
        "spec": model.spec.to_dict(),
        "pollutant": model.pollutant.value,
        "lag": model.lag,
        "params": _encode(model.params),
        "scalers": {k: s.to_dict() for k, s in model.scalers.items()},
        "history": _encode(model.history),
        "info": _encode(model.info),
    }


def model_from_dict(doc: dict) -> FittedModel:
    if doc.get("format") != FORMAT:
        raise ValueError("not an aqiforecast checkpoint")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    return FittedModel(
        ModelSpec.from_dict(doc["spec"]),
        Pollutant.parse(doc["pollutant"]),
        int(doc["lag"]),
        _decode(doc["params"]),
        {k: Scaler.from_dict(v) for k, v in doc["scalers"].items()},
        _decode(doc["history"]),
        _decode(doc["info"]),
    )


def dumps(model: FittedModel) -> str:
    return json.dumps(model_to_dict(model), indent=1, sort_keys=True)


def loads(text: str) -> FittedModel:
    return model_from_dict(json.loads(text))


def save_checkpoint(model: FittedModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(model) + "\n", encoding="utf-8")
    return path


def load_checkpoint(path: str | Path) -> FittedModel:
    return loads(Path(path).read_text(encoding="utf-8"))
