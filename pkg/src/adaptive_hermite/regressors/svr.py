"""nu-support vector regression with an RBF kernel, trained by SMO.

The dual is written in the 2l-variable form used by LIBSVM,

    min 1/2 b^T Q b + p^T b,  b = [alpha; alpha*],
    s^T b = 0,  e^T b = C nu l,  0 <= b_i <= C,

with s = [+1; -1], Q_ij = s_i s_j K(x_i, x_j) and p = [-y; +y]. Because both
equality constraints are active, a working pair must come from the same
sign class; the solver picks the maximal violating pair in each class and
keeps the pair promising the larger decrease.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .scaling import MinMaxScaler

TAU = 1e-12


class SvrTrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i - alpha*_i for each support vector
    intercept: float
    gamma: float
    nu: float
    c: float
    scaler: MinMaxScaler
    meta: dict = field(default_factory=dict)

    def decision(self, x_scaled) -> np.ndarray:
        k = rbf_kernel(np.atleast_2d(x_scaled), self.support_vectors, self.gamma)
        return k @ self.dual_coef + self.intercept


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _initial_point(l: int, c: float, nu: float) -> np.ndarray:
    """Spread the nu budget evenly over both halves (as LIBSVM's solve_nu_svr)."""
    total = c * nu * l / 2.0
    half = np.zeros(l)
    for i in range(l):
        half[i] = min(total, c)
        total -= half[i]
    return np.concatenate([half, half])


@numba.njit(cache=True)
def _smo_loop(q, grad, beta, s, c, tol, max_iter):
    """Pairwise descent until the largest KKT violation is below ``tol``.

    In each sign class, i is the most violating variable that may grow and
    j maximizes the decrease (G_j - G_i)^2 / eta_ij among variables that may
    shrink; the class offering the larger decrease wins. Returns the
    iteration count, or -1 if the budget ran out.
    """
    m = beta.size
    for it in range(max_iter):
        best_gain = -1.0
        bi = -1
        bj = -1
        worst = 0.0
        for sign in (1.0, -1.0):
            i = -1
            gmin = np.inf
            for t in range(m):
                if s[t] == sign and beta[t] < c and grad[t] < gmin:
                    gmin = grad[t]
                    i = t
            if i < 0:
                continue
            for t in range(m):
                if s[t] != sign or beta[t] <= 0.0:
                    continue
                gap = grad[t] - gmin
                if gap > worst:
                    worst = gap
                if gap > 0.0:
                    eta = max(q[i, i] + q[t, t] - 2.0 * q[i, t], TAU)
                    gain = gap * gap / eta
                    if gain > best_gain:
                        best_gain = gain
                        bi = i
                        bj = t
        if worst < tol or bi < 0:
            return it
        i, j = bi, bj
        eta = max(q[i, i] + q[j, j] - 2.0 * q[i, j], TAU)
        d = min((grad[j] - grad[i]) / eta, c - beta[i], beta[j])
        # snap to the box exactly so no variable ends up a rounding error away
        new_i = c if d == c - beta[i] else beta[i] + d
        new_j = 0.0 if d == beta[j] else beta[j] - d
        di = new_i - beta[i]
        dj = beta[j] - new_j
        for t in range(m):
            grad[t] += di * q[t, i] - dj * q[t, j]
        beta[i] = new_i
        beta[j] = new_j
    return -1


def solve_nu_svr_dual(
    kernel: np.ndarray,
    y: np.ndarray,
    nu: float,
    c: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 10_000_000,
) -> tuple[np.ndarray, float, int]:
    """Return (alpha - alpha*, intercept, iterations) for a precomputed kernel."""
    l = y.size
    s = np.concatenate([np.ones(l), -np.ones(l)])
    kk = np.block([[kernel, kernel], [kernel, kernel]])
    q = np.ascontiguousarray(s[:, None] * s[None, :] * kk)
    p = np.concatenate([-y, y])
    beta = _initial_point(l, c, nu)
    grad = q @ beta + p
    it = _smo_loop(q, grad, beta, s, float(c), float(tol), int(max_iter))
    if it < 0:
        raise SvrTrainingError(f"SMO did not converge in {max_iter} iterations")

    # r1 / r2: multipliers of the two equality constraints, per sign class
    r = []
    for sign in (1.0, -1.0):
        cls = s == sign
        free = cls & (beta > 0) & (beta < c)
        if np.any(free):
            r.append(grad[free].mean())
        else:
            ub = np.min(grad[cls & (beta < c)], initial=np.inf)
            lb = np.max(grad[cls & (beta > 0)], initial=-np.inf)
            r.append(0.5 * (ub + lb))
    r1, r2 = r
    intercept = (r2 - r1) / 2.0
    coef = beta[:l] - beta[l:]
    return coef, float(intercept), it


def train_svr(
    x,
    y,
    nu: float = 0.5,
    c: float = 1.0,
    gamma: float | None = None,
    tol: float = 1e-6,
) -> SvrModel:
    """Fit a nu-SVR on features scaled to [-1, 1]; gamma defaults to 1/n_features."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if x.shape[0] != y.size or y.size < 1:
        raise ValueError("need at least one sample with matching targets")
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    scaler = MinMaxScaler.fit(x)
    xs = scaler.transform(x)
    g = 1.0 / x.shape[1] if gamma is None else float(gamma)
    coef, b, iters = solve_nu_svr_dual(rbf_kernel(xs, xs, g), y, nu, c, tol)
    sv = np.abs(coef) > 0
    return SvrModel(xs[sv], coef[sv], b, g, nu, c, scaler, {"iterations": iters, "n_sv": int(sv.sum())})


def predict_svr(model: SvrModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.scaler.lo.size:
        raise ValueError(f"expected {model.scaler.lo.size} features, got {x.shape[1]}")
    return model.decision(model.scaler.transform(x))
