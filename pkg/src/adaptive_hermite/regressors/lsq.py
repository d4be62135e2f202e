"""Linear least-squares baseline alpha ~ f . w, with Gram-matrix diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class LsqModel:
    weights: np.ndarray
    rank: int
    gram_det: float
    rank_deficient: bool
    singular_values: np.ndarray
    meta: dict = field(default_factory=dict)


def train_lsq(x, y, rcond: float | None = None) -> LsqModel:
    """Minimum-norm least-squares fit.

    The Gram matrix V^T V of the feature matrix is singular whenever the
    features span fewer than N directions; the fit still goes through, but
    the model is flagged so callers can report it.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    w, _, rank, sv = np.linalg.lstsq(x, y, rcond=rcond)
    n = x.shape[1]
    gram = x.T @ x
    gram_sv = np.linalg.svd(gram, compute_uv=False)
    gram_det = float(np.prod(gram_sv)) if rank == n else 0.0
    return LsqModel(w, int(rank), gram_det, bool(rank < n), sv, {"samples": int(y.size)})


def predict_lsq(model: LsqModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.weights.size:
        raise ValueError(f"expected {model.weights.size} features, got {x.shape[1]}")
    return x @ model.weights
