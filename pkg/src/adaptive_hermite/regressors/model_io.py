"""JSON serialization of trained regressors.

Python's float repr round-trips exactly, so a loaded model predicts bitwise
the same values as the one that was saved.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lsq import LsqModel
from .mlp import MlpModel
from .scaling import MinMaxScaler
from .svr import SvrModel

FORMAT_VERSION = 1


def model_to_dict(model) -> dict:
    if isinstance(model, SvrModel):
        return {
            "kind": "svr",
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "intercept": model.intercept,
            "gamma": model.gamma,
            "nu": model.nu,
            "c": model.c,
            "scaler": model.scaler.to_dict(),
            "meta": model.meta,
        }
    if isinstance(model, MlpModel):
        return {
            "kind": "mlp",
            "layer_sizes": list(model.layer_sizes),
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "scaler": model.scaler.to_dict(),
            "y_center": model.y_center,
            "y_scale": model.y_scale,
            "meta": model.meta,
        }
    if isinstance(model, LsqModel):
        return {
            "kind": "lsq",
            "weights": model.weights.tolist(),
            "rank": model.rank,
            "gram_det": model.gram_det,
            "rank_deficient": model.rank_deficient,
            "singular_values": model.singular_values.tolist(),
            "meta": model.meta,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "svr":
        return SvrModel(
            np.array(d["support_vectors"], dtype=float).reshape(len(d["dual_coef"]), len(d["scaler"]["lo"])),
            np.array(d["dual_coef"], dtype=float),
            float(d["intercept"]),
            float(d["gamma"]),
            float(d["nu"]),
            float(d["c"]),
            MinMaxScaler.from_dict(d["scaler"]),
            dict(d.get("meta", {})),
        )
    if kind == "mlp":
        return MlpModel(
            tuple(d["layer_sizes"]),
            [np.array(w, dtype=float) for w in d["weights"]],
            [np.array(b, dtype=float) for b in d["biases"]],
            MinMaxScaler.from_dict(d["scaler"]),
            float(d["y_center"]),
            float(d["y_scale"]),
            dict(d.get("meta", {})),
        )
    if kind == "lsq":
        return LsqModel(
            np.array(d["weights"], dtype=float),
            int(d["rank"]),
            float(d["gram_det"]),
            bool(d["rank_deficient"]),
            np.array(d["singular_values"], dtype=float),
            dict(d.get("meta", {})),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"format_version": FORMAT_VERSION, **model_to_dict(model)}
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def load_model(path):
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: cannot read model ({exc})") from exc
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {d.get('format_version')!r}")
    return model_from_dict(d)
