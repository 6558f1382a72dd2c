"""JSON checkpoints shared by the quantum model and every baseline."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import NormalizationParams
from .errors import DataError
from .estimators import ConstantBaseline, FullyConnectedAutoencoder, QuantumAutoencoder

FORMAT = "qae3d-checkpoint"
VERSION = 1

_CLASSES = {
    "quantum": QuantumAutoencoder,
    "mimic": QuantumAutoencoder,
    "qe-cd": QuantumAutoencoder,
    "ce-qd": QuantumAutoencoder,
    "fc": FullyConnectedAutoencoder,
    "constant": ConstantBaseline,
}


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def checkpoint_dict(estimator) -> dict:
    arch = {k: _plain(v) for k, v in estimator.get_params().items() if k != "normalization"}
    d = {
        "format": FORMAT,
        "version": VERSION,
        "model": estimator.model_kind,
        "architecture": arch,
        "n_vertices": int(estimator.n_vertices_),
        "normalization": estimator.norm_.to_dict(),
        "seed": arch.get("random_state"),
        "params": {k: [float(x) for x in np.asarray(v).ravel()] for k, v in estimator.parameter_groups().items()},
    }
    if hasattr(estimator, "n_qubits_"):
        d["n_qubits"] = int(estimator.n_qubits_)
    return d


def dumps(estimator) -> str:
    return json.dumps(checkpoint_dict(estimator), indent=1, sort_keys=True) + "\n"


def save(estimator, path) -> None:
    Path(path).write_text(dumps(estimator))


def from_dict(d: dict):
    try:
        if d.get("format") != FORMAT:
            raise DataError("not a qae3d checkpoint")
        cls = _CLASSES[d["model"]]
        est = cls(**d["architecture"])
        norm = NormalizationParams.from_dict(d["normalization"])
        return est._restore(int(d["n_vertices"]), norm, d["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"corrupt checkpoint: {exc}") from exc


def load(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt checkpoint {path}: {exc}") from exc
    return from_dict(d)
