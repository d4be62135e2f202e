"""Scaling-factor predictors: nu-SVR, Levenberg-Marquardt MLP and a linear baseline."""

import numpy as np

from .lsq import LsqModel, predict_lsq, train_lsq
from .mlp import MlpModel, MlpTrainingError, predict_mlp, train_mlp
from .model_io import load_model, save_model
from .scaling import MinMaxScaler
from .svr import SvrModel, SvrTrainingError, predict_svr, train_svr


def predict(model, features):
    """Dispatch to the predictor matching ``model``'s type.

    A plain callable is accepted too and applied to the features directly,
    which lets hand-written oracles stand in for a trained regressor.
    """
    if isinstance(model, SvrModel):
        return predict_svr(model, features)
    if isinstance(model, MlpModel):
        return predict_mlp(model, features)
    if isinstance(model, LsqModel):
        return predict_lsq(model, features)
    if callable(model):
        return np.atleast_1d(np.asarray(model(features), dtype=float))
    raise TypeError(f"unsupported model type {type(model).__name__}")


__all__ = [
    "LsqModel",
    "MinMaxScaler",
    "MlpModel",
    "MlpTrainingError",
    "SvrModel",
    "SvrTrainingError",
    "load_model",
    "predict",
    "predict_lsq",
    "predict_mlp",
    "predict_svr",
    "save_model",
    "train_lsq",
    "train_mlp",
    "train_svr",
]
