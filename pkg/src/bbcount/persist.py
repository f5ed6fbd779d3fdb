"""Versioned JSON persistence for trained models plus their normalizer.

JSON doubles round-trip exactly, so a reloaded model reproduces forward()
bit-identically on the same platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import brbpnn, pnn
from .traces import Normalizer

SCHEMA_VERSION = 1


class PersistError(Exception):
    pass


@dataclass
class SavedModel:
    kind: str  # "pnn" | "brbpnn"
    model: Union[pnn.PnnModel, brbpnn.BrbpnnModel]
    normalizer: Normalizer
    key: tuple[str, int, int]
    seed: int
    config: dict

    def predict_normalized(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "pnn":
            return np.atleast_1d(pnn.forward(self.model, X))
        return np.atleast_1d(brbpnn.forward(self.model, X))

    def predict_counts(self, raw_params: np.ndarray) -> np.ndarray:
        """Raw parameter vectors in, raw (denormalized) count predictions out."""
        X = self.normalizer.transform_features(np.atleast_2d(raw_params))
        return self.normalizer.inverse_targets(self.predict_normalized(X))


def _normalizer_doc(norm: Normalizer) -> dict:
    return {
        "x_min": norm.x_min.tolist(),
        "x_max": norm.x_max.tolist(),
        "y_min": norm.y_min,
        "y_max": norm.y_max,
    }


def save_model(saved: SavedModel, path: Union[str, Path]) -> None:
    model = saved.model
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": saved.kind,
        "key": {"app": saved.key[0], "kernel_id": saved.key[1], "bb_id": saved.key[2]},
        "arch": {"n_inputs": model.n_inputs, "hidden": model.hidden},
        "seed": saved.seed,
        "config": saved.config,
        "normalizer": _normalizer_doc(saved.normalizer),
        "weights": {
            "W1": model.W1.tolist(),
            "b1": model.b1.tolist(),
            "W2": model.W2.tolist(),
            "b2": model.b2,
        },
    }
    if saved.kind == "pnn":
        doc["eps"] = model.eps
    elif saved.kind == "brbpnn":
        doc["alpha"] = model.alpha
        doc["beta"] = model.beta
        doc["gamma"] = saved.config.get("gamma")
        doc["mu"] = saved.config.get("mu")
    else:
        raise PersistError(f"unknown model kind {saved.kind!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def load_model(path: Union[str, Path]) -> SavedModel:
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    try:
        if doc["schema_version"] != SCHEMA_VERSION:
            raise PersistError(f"unsupported schema version {doc['schema_version']}")
        kind = doc["kind"]
        weights = doc["weights"]
        W1 = np.array(weights["W1"], dtype=float)
        b1 = np.array(weights["b1"], dtype=float)
        W2 = np.array(weights["W2"], dtype=float)
        b2 = float(weights["b2"])
        if kind == "pnn":
            model: Union[pnn.PnnModel, brbpnn.BrbpnnModel] = pnn.PnnModel(
                W1, b1, W2, b2, eps=doc["eps"]
            )
        elif kind == "brbpnn":
            model = brbpnn.BrbpnnModel(
                W1, b1, W2, b2, alpha=doc["alpha"], beta=doc["beta"]
            )
        else:
            raise PersistError(f"unknown model kind {kind!r}")
        norm_doc = doc["normalizer"]
        normalizer = Normalizer(
            x_min=np.array(norm_doc["x_min"], dtype=float),
            x_max=np.array(norm_doc["x_max"], dtype=float),
            y_min=norm_doc["y_min"],
            y_max=norm_doc["y_max"],
        )
        key_doc = doc["key"]
        key = (key_doc["app"], key_doc["kernel_id"], key_doc["bb_id"])
        return SavedModel(kind, model, normalizer, key, doc["seed"], doc["config"])
    except KeyError as exc:
        raise PersistError(f"model file missing field {exc}") from exc
