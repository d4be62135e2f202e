"""Small tanh feed-forward network trained by Levenberg-Marquardt.

The network has tanh hidden layers and a linear output. LM solves
(J^T J + mu I) dw = -J^T r with a dense Jacobian, multiplying mu by 10 on a
rejected step and dividing by 10 on an accepted one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scaling import MinMaxScaler

MU_INIT = 1e-3
MU_MAX = 1e10
MAX_RESTARTS = 5


class MlpTrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list  # weights[k] has shape (n_out, n_in)
    biases: list
    scaler: MinMaxScaler
    y_center: float
    y_scale: float
    meta: dict = field(default_factory=dict)


def _unpack(theta, sizes):
    ws, bs = [], []
    pos = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        ws.append(theta[pos : pos + n_out * n_in].reshape(n_out, n_in))
        pos += n_out * n_in
        bs.append(theta[pos : pos + n_out])
        pos += n_out
    return ws, bs


def _n_params(sizes) -> int:
    return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))


def _forward(theta, sizes, x):
    """Return the output (samples,) and the activations of every layer."""
    ws, bs = _unpack(theta, sizes)
    acts = [x]
    a = x
    for k, (w, b) in enumerate(zip(ws, bs)):
        z = a @ w.T + b
        a = z if k == len(ws) - 1 else np.tanh(z)
        acts.append(a)
    return a[:, 0], acts


def _jacobian(theta, sizes, x):
    """d output / d theta for every sample, shape (samples, n_params)."""
    ws, _ = _unpack(theta, sizes)
    _, acts = _forward(theta, sizes, x)
    m = x.shape[0]
    blocks = []
    delta = np.ones((m, 1))  # d out / d z at the linear output layer
    for k in range(len(ws) - 1, -1, -1):
        a_in = acts[k]
        gw = (delta[:, :, None] * a_in[:, None, :]).reshape(m, -1)
        blocks.append(np.hstack([gw, delta]))
        if k > 0:
            delta = (delta @ ws[k]) * (1.0 - acts[k] ** 2)
    return np.hstack(blocks[::-1])


def _init_theta(sizes, rng) -> np.ndarray:
    parts = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        lim = 1.0 / math.sqrt(n_in)
        parts.append(rng.uniform(-lim, lim, n_out * n_in))
        parts.append(rng.uniform(-lim, lim, n_out))
    return np.concatenate(parts)


def _levenberg_marquardt(theta, sizes, x, t, target_sse, max_epochs):
    r = _forward(theta, sizes, x)[0] - t
    sse = float(r @ r)
    history = [sse]
    mu = MU_INIT
    eye = np.eye(theta.size)
    epoch = 0
    while epoch < max_epochs and sse > target_sse:
        jac = _jacobian(theta, sizes, x)
        jtj, jtr = jac.T @ jac, jac.T @ r
        accepted = False
        while mu <= MU_MAX:
            try:
                step = np.linalg.solve(jtj + mu * eye, -jtr)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = theta + step
            r_new = _forward(trial, sizes, x)[0] - t
            sse_new = float(r_new @ r_new)
            if not math.isfinite(sse_new):
                return trial, sse_new, epoch, history
            if sse_new < sse:
                theta, r, sse = trial, r_new, sse_new
                history.append(sse)
                mu = max(mu / 10.0, 1e-20)
                accepted = True
                break
            mu *= 10.0
        epoch += 1
        if not accepted:
            break
    return theta, sse, epoch, history


def train_mlp(
    x,
    y,
    layer_sizes=(20, 10),
    max_epochs: int = 500,
    target_mse: float = 1e-6,
    rng_seed: int = 0,
) -> MlpModel:
    """Fit the network; ``layer_sizes`` lists the hidden widths only.

    Inputs go through the [-1, 1] scaler and targets are centred and scaled
    to unit spread; the stopping threshold is the MSE in original units.
    A run whose loss turns non-finite is restarted from a fresh draw.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.size:
        raise ValueError("features and targets disagree in length")
    sizes = (x.shape[1], *map(int, layer_sizes), 1)
    scaler = MinMaxScaler.fit(x)
    xs = scaler.transform(x)
    center = float(y.mean())
    scale = float(y.std()) or 1.0
    t = (y - center) / scale
    target_sse = target_mse * y.size / scale**2
    rng = np.random.default_rng(rng_seed)
    for attempt in range(MAX_RESTARTS):
        theta = _init_theta(sizes, rng)
        theta, sse, epochs, history = _levenberg_marquardt(theta, sizes, xs, t, target_sse, max_epochs)
        if math.isfinite(sse):
            ws, bs = _unpack(theta, sizes)
            meta = {
                "epochs": epochs,
                "mse": sse * scale**2 / y.size,
                "restarts": attempt,
                "loss_history": [h * scale**2 / y.size for h in history],
            }
            return MlpModel(sizes, [w.copy() for w in ws], [b.copy() for b in bs], scaler, center, scale, meta)
    raise MlpTrainingError(f"training diverged in all {MAX_RESTARTS} attempts")


def _theta(model: MlpModel) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(model.weights, model.biases)])


def predict_mlp(model: MlpModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.layer_sizes[0]:
        raise ValueError(f"expected {model.layer_sizes[0]} features, got {x.shape[1]}")
    xs = model.scaler.transform(x)
    out, _ = _forward(_theta(model), model.layer_sizes, xs)
    return out * model.y_scale + model.y_center
