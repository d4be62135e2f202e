"""Hermite polynomials, Gauss-Hermite nodes/weights and collocation matrices.

Physicists' convention throughout: H_0 = 1, H_1 = 2z and
H_{n+1} = 2 z H_n - 2 n H_{n-1}, orthogonal under exp(-z^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_NODES = 200


class BasisConstructionError(RuntimeError):
    """Raised when nodes or weights cannot be computed reliably."""


def hermite_eval(n: int, zeta):
    """Evaluate H_n at ``zeta`` (scalar or array) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    z = np.asarray(zeta, dtype=float)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev if z.ndim else float(h_prev)
    h = 2.0 * z
    for k in range(1, n):
        h_prev, h = h, 2.0 * z * h - 2.0 * k * h_prev
    return h if z.ndim else float(h)


def hermite_eval_all(n_max: int, zeta) -> np.ndarray:
    """Return ``[H_0(zeta), ..., H_{n_max}(zeta)]`` from a single recurrence pass.

    The leading axis indexes the degree; trailing axes follow ``zeta``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    z = np.asarray(zeta, dtype=float)
    out = np.empty((n_max + 1,) + z.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = 2.0 * z
    for k in range(1, n_max):
        out[k + 1] = 2.0 * z * out[k] - 2.0 * k * out[k - 1]
    return out


def _normalized_pair(n: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Hermite values (psi_{n-1}, psi_n) at ``z``.

    psi_k = H_k / sqrt(2^k k! sqrt(pi)); the recurrence stays O(1) for any
    n in range, which keeps everything finite up to n = MAX_NODES.
    """
    psi_prev = np.zeros_like(z)
    psi = np.full_like(z, math.pi ** -0.25)
    for k in range(n):
        psi_prev, psi = psi, (
            math.sqrt(2.0 / (k + 1)) * z * psi - math.sqrt(k / (k + 1)) * psi_prev
        )
    return psi_prev, psi


def log_abs_hermite(n: int, zeta) -> np.ndarray:
    """log|H_n(zeta)| via the scaled recurrence (no overflow for large n)."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    _, psi = _normalized_pair(n, z)
    log_norm = 0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi))
    with np.errstate(divide="ignore"):
        return np.log(np.abs(psi)) + log_norm


def compute_nodes(n: int, max_newton: int = 8) -> np.ndarray:
    """Zeros of H_n in ascending order.

    Eigenvalues of the symmetric Jacobi matrix give the starting guesses;
    each root is then Newton-polished with H_n / H_n'.
    """
    if not 1 <= n <= MAX_NODES:
        raise ValueError(f"n must lie in [1, {MAX_NODES}], got {n}")
    if n == 1:
        return np.zeros(1)
    off = np.sqrt(np.arange(1, n) / 2.0)
    jacobi = np.diag(off, 1) + np.diag(off, -1)
    x = np.sort(np.linalg.eigvalsh(jacobi))
    step = np.full(n, np.inf)
    for _ in range(max_newton):
        psi_prev, psi = _normalized_pair(n, x)
        # H_n / H_n' expressed with orthonormal values
        step = psi / (math.sqrt(2.0 * n) * psi_prev)
        x = x - step
        if np.all(np.abs(step) < 1e-15 * np.maximum(1.0, np.abs(x))):
            break
    psi_prev, psi = _normalized_pair(n, x)
    step = np.abs(psi / (math.sqrt(2.0 * n) * psi_prev))
    if not np.all(step < 1e-14 * np.maximum(1.0, np.abs(x))):
        raise BasisConstructionError(f"Newton polish of H_{n} zeros did not converge")
    x = 0.5 * (x - x[::-1])
    if n % 2:
        x[n // 2] = 0.0
    return x


def compute_weights(n: int, nodes: np.ndarray) -> np.ndarray:
    """Gauss-Hermite weights sqrt(pi) 2^{n+1} n! / H_n'(xi_j)^2, evaluated in log space."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.shape != (n,):
        raise ValueError("nodes must have length n")
    # H_n' = 2n H_{n-1}
    log_dh = math.log(2.0 * n) + log_abs_hermite(n - 1, nodes)
    log_w = (
        0.5 * math.log(math.pi)
        + (n + 1) * math.log(2.0)
        + math.lgamma(n + 1)
        - 2.0 * log_dh
    )
    w = np.exp(log_w)
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise BasisConstructionError(f"non-finite quadrature weight for n={n}")
    return w


def diff_matrices(n: int, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative matrices of the Lagrange basis on ``nodes``.

    d1[i, j] = H_n'(xi_i) / (H_n'(xi_j) (xi_i - xi_j)) off the diagonal and
    d1[j, j] = xi_j; the second matrix is the square of the first.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.shape != (n,):
        raise ValueError("nodes must have length n")
    if n == 1:
        return np.zeros((1, 1)), np.zeros((1, 1))
    dh, _ = _normalized_pair(n, nodes)  # proportional to H_n'(xi)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d1 = (dh[:, None] / dh[None, :]) / diff
    np.fill_diagonal(d1, nodes)
    return d1, d1 @ d1


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    """Immutable bundle of nodes, weights and differentiation matrices for fixed N."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    bary: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, n: int) -> "HermiteBasis":
        nodes = compute_nodes(n)
        weights = compute_weights(n, nodes)
        d1, d2 = diff_matrices(n, nodes)
        if n > 1:
            bary, _ = _normalized_pair(n, nodes)
            bary = 1.0 / bary
            bary /= np.abs(bary).max()
        else:
            bary = np.ones(1)
        arrays = [nodes, weights, d1, d2, bary]
        for a in arrays:
            a.setflags(write=False)
        return cls(n, *arrays)

    def __len__(self) -> int:
        return self.n


@lru_cache(maxsize=64)
def hermite_basis(n: int) -> HermiteBasis:
    """Cached :class:`HermiteBasis` for ``n`` nodes."""
    return HermiteBasis.build(n)


def gauss_hermite_integrate(basis: HermiteBasis, f_at_nodes) -> float:
    """Approximate the integral of q(x) exp(-x^2) from samples q(xi_j).

    Exact up to rounding when q is a polynomial of degree < 2N.
    """
    f = np.asarray(f_at_nodes, dtype=float)
    if f.shape[0] != basis.n:
        raise ValueError(f"expected {basis.n} samples, got {f.shape[0]}")
    return float(np.dot(basis.weights, f)) if f.ndim == 1 else basis.weights @ f
