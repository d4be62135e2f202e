"""Hermite collocation for u_t - u_xx = f on the real line.

The unknown is written u = p(x, t) exp(-alpha^2 x^2) and p is collocated at
the zeros xi_j of H_N, which are also the physical evaluation points.
Alpha is held fixed inside each Euler segment and changed between segments
by rescaling the nodal values (see :func:`switch_alpha`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numba
import numpy as np
from numba.extending import is_jitted

from .basis_transform import (
    Expansion,
    NodalFunction,
    barycentric_interpolate,
    evaluate_hermite_function,
    pv_to_fc,
    rescale_point_values,
)
from .hermite_core import HermiteBasis, hermite_eval_all

DIVERGENCE_LIMIT = 1e10

Forcing = Callable[[np.ndarray, float], np.ndarray]


# -- reference problems -------------------------------------------------------


def alpha_homogeneous(t):
    return 0.5 / np.sqrt(t + 1.0)


def alpha_nonhomogeneous(t):
    return math.sqrt(2.0) / np.sqrt(3.0 * t + 1.0)


def exact_homogeneous(x, t):
    """2 alpha(t) exp(-alpha(t)^2 x^2) with alpha(t) = 1 / (2 sqrt(t + 1))."""
    a = alpha_homogeneous(t)
    return 2.0 * a * np.exp(-((a * x) ** 2))


@numba.njit(cache=True)
def exact_nonhomogeneous(x, t):
    """(cos(x t / 2) + 2 (t sin x)^2) exp(-alpha(t)^2 x^2), alpha(t)^2 = 2 / (3t + 1)."""
    a2 = 2.0 / (3.0 * t + 1.0)
    s = np.sin(x)
    return (np.cos(0.5 * x * t) + 2.0 * t * t * s * s) * np.exp(-a2 * x * x)


@numba.njit(cache=True)
def forcing_nonhomogeneous(x, t):
    """u_t - u_xx for :func:`exact_nonhomogeneous`, in closed form.

    With u = g E, E = exp(-A x^2):
    f / E = g_t - A' x^2 g - g_xx + 4 A x g_x - (4 A^2 x^2 - 2 A) g.
    """
    a2 = 2.0 / (3.0 * t + 1.0)
    da2 = -1.5 * a2 * a2
    s = np.sin(x)
    ch = np.cos(0.5 * x * t)
    sh = np.sin(0.5 * x * t)
    g = ch + 2.0 * t * t * s * s
    g_t = -0.5 * x * sh + 4.0 * t * s * s
    g_x = -0.5 * t * sh + 2.0 * t * t * np.sin(2.0 * x)
    g_xx = -0.25 * t * t * ch + 4.0 * t * t * np.cos(2.0 * x)
    f_over_e = (
        g_t - da2 * x * x * g - g_xx + 4.0 * a2 * x * g_x - (4.0 * a2 * a2 * x * x - 2.0 * a2) * g
    )
    return f_over_e * np.exp(-a2 * x * x)


@numba.njit(cache=True)
def no_forcing(x, t):
    return 0.0 * x


@dataclass(frozen=True)
class ProblemSpec:
    forcing: Optional[Forcing]
    exact_solution: Optional[Callable] = None
    initial_p: Optional[Callable[[HermiteBasis, float], np.ndarray]] = None
    name: str = "custom"


def _initial_p_homogeneous(basis, alpha0):
    # u(x, 0) = exp(-x^2 / 4)
    return np.exp((alpha0**2 - 0.25) * basis.nodes**2)


def _initial_p_nonhomogeneous(basis, alpha0):
    # u(x, 0) = exp(-2 x^2)
    return np.exp((alpha0**2 - 2.0) * basis.nodes**2)


HOMOGENEOUS = ProblemSpec(None, exact_homogeneous, _initial_p_homogeneous, "homogeneous")
NONHOMOGENEOUS = ProblemSpec(
    forcing_nonhomogeneous, exact_nonhomogeneous, _initial_p_nonhomogeneous, "nonhomogeneous"
)


# -- state and time stepping --------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Nodal values of p_N plus the current scaling factor and time."""

    p_at_nodes: np.ndarray
    alpha: float
    t: float
    basis: HermiteBasis
    diverged: bool = False
    diverged_step: Optional[int] = None

    @classmethod
    def initial(cls, basis: HermiteBasis, problem: ProblemSpec, alpha0: float) -> "SpectralState":
        return cls(np.asarray(problem.initial_p(basis, alpha0), dtype=float), alpha0, 0.0, basis)

    def u_at_nodes(self) -> np.ndarray:
        return self.p_at_nodes * np.exp(-((self.alpha * self.basis.nodes) ** 2))

    def evaluate(self, x) -> np.ndarray:
        return evaluate_hermite_function(self.p_at_nodes, self.basis, self.alpha, x)


def _operator(basis: HermiteBasis, alpha: float) -> np.ndarray:
    """Constant-alpha collocation matrix acting on nodal p."""
    xi = basis.nodes
    a2 = alpha * alpha
    return (
        basis.d2
        - 4.0 * a2 * xi[:, None] * basis.d1
        + np.diag(2.0 * a2 * (2.0 * a2 * xi**2 - 1.0))
    )


def _eval_forcing(forcing, x, t) -> np.ndarray:
    return np.broadcast_to(np.asarray(forcing(x, t), dtype=float), x.shape)


def collocation_rhs(state: SpectralState, alpha_prime: float, forcing: Optional[Forcing]) -> np.ndarray:
    """dp/dt at the nodes.

    D2 p - 4 a^2 xi D1 p + 2 a^2 (2 (a xi)^2 - 1) p + 2 a a' xi^2 p + f exp(a^2 xi^2).
    """
    xi = state.basis.nodes
    a = state.alpha
    p = state.p_at_nodes
    rhs = _operator(state.basis, a) @ p + 2.0 * a * alpha_prime * xi**2 * p
    if forcing is not None:
        rhs = rhs + _eval_forcing(forcing, xi, state.t) * np.exp((a * xi) ** 2)
    return rhs


def euler_step(state: SpectralState, dt: float, forcing: Optional[Forcing]) -> SpectralState:
    """One forward-Euler step with alpha frozen."""
    if state.diverged:
        return state
    p = state.p_at_nodes + dt * collocation_rhs(state, 0.0, forcing)
    new = replace(state, p_at_nodes=p, t=state.t + dt)
    if not np.all(np.isfinite(p)) or np.max(np.abs(p)) > DIVERGENCE_LIMIT:
        new = replace(new, diverged=True, diverged_step=1)
    return new


@numba.njit(cache=True)
def _euler_free(p, op, dt, nsteps, limit):
    n = p.shape[0]
    q = np.empty(n)
    for k in range(nsteps):
        big = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += op[i, j] * p[j]
            q[i] = p[i] + dt * acc
            if not abs(q[i]) <= limit:
                big = np.inf
        p, q = q, p
        if big > 0.0:
            return p, k + 1
    return p, -1


@numba.njit(cache=True)
def _euler_forced(p, op, xi, ew, forcing, t0, dt, nsteps, limit):
    n = p.shape[0]
    q = np.empty(n)
    for k in range(nsteps):
        t = t0 + k * dt
        big = 0.0
        for i in range(n):
            acc = forcing(xi[i], t) * ew[i]
            for j in range(n):
                acc += op[i, j] * p[j]
            q[i] = p[i] + dt * acc
            if not abs(q[i]) <= limit:
                big = np.inf
        p, q = q, p
        if big > 0.0:
            return p, k + 1
    return p, -1


def run_segment(
    state: SpectralState, m_steps: int, dt: float, forcing: Optional[Forcing]
) -> SpectralState:
    """Advance ``m_steps`` Euler steps at the state's fixed alpha.

    Stops early and flags divergence once any nodal value exceeds the
    sentinel; ``diverged_step`` is the 1-based step index within this segment.
    """
    if state.diverged or m_steps == 0:
        return state
    basis = state.basis
    op = _operator(basis, state.alpha)
    p0 = np.array(state.p_at_nodes, dtype=float)
    if forcing is None:
        p, hit = _euler_free(p0, op, dt, m_steps, DIVERGENCE_LIMIT)
    elif is_jitted(forcing):
        ew = np.exp((state.alpha * basis.nodes) ** 2)
        p, hit = _euler_forced(
            p0, op, basis.nodes, ew, forcing, state.t, dt, m_steps, DIVERGENCE_LIMIT
        )
    else:
        p, hit = _euler_python(p0, op, basis.nodes, state.alpha, forcing, state.t, dt, m_steps)
    if hit >= 0:
        return replace(state, p_at_nodes=p, t=state.t + hit * dt, diverged=True, diverged_step=hit)
    return replace(state, p_at_nodes=p, t=state.t + m_steps * dt)


def _euler_python(p, op, xi, alpha, forcing, t0, dt, nsteps):
    ew = np.exp((alpha * xi) ** 2)
    for k in range(nsteps):
        p = p + dt * (op @ p + _eval_forcing(forcing, xi, t0 + k * dt) * ew)
        if not np.max(np.abs(p)) <= DIVERGENCE_LIMIT:
            return p, k + 1
    return p, -1


def switch_alpha(state: SpectralState, alpha_new: float) -> SpectralState:
    """Change the Gaussian scaling while keeping u_N fixed at the nodes."""
    if alpha_new == state.alpha:
        return state
    p = rescale_point_values(state.basis, state.p_at_nodes, state.alpha, alpha_new)
    return replace(state, p_at_nodes=p, alpha=float(alpha_new))


def state_coefficients(state: SpectralState) -> Expansion:
    """Fourier coefficients of u_N in the basis exp(-a^2 x^2) H_l(a x)."""
    basis = state.basis
    values = barycentric_interpolate(basis, state.p_at_nodes, basis.nodes / state.alpha)
    return pv_to_fc(basis, NodalFunction(state.alpha, values))


def state_from_coefficients(basis: HermiteBasis, exp: Expansion, t: float = 0.0) -> SpectralState:
    """Inverse of :func:`state_coefficients`: p(x) = sum_l c_l H_l(alpha x)."""
    h = hermite_eval_all(basis.n - 1, exp.alpha * basis.nodes)
    return SpectralState(np.asarray(exp.coeffs) @ h, exp.alpha, t, basis)


# -- Galerkin reference -------------------------------------------------------


def galerkin_rhs(coeffs, alpha: float, alpha_prime: float, f_coeffs=None) -> np.ndarray:
    """d c_m / dt = (a'/(2a) + a^2) c_{m-2} + (m+1) (a'/a) c_m + f_m."""
    if alpha == 0:
        raise ZeroDivisionError("alpha must be non-zero")
    c = np.asarray(coeffs, dtype=float)
    m = np.arange(c.size)
    out = (m + 1) * (alpha_prime / alpha) * c
    out[2:] += (alpha_prime / (2.0 * alpha) + alpha**2) * c[:-2]
    if f_coeffs is not None:
        out = out + np.asarray(f_coeffs, dtype=float)
    return out


def galerkin_euler(
    coeffs,
    dt: float,
    n_steps: int,
    alpha: Callable[[float], float] | float,
    alpha_prime: Callable[[float], float] | float = 0.0,
    f_coeffs: Optional[Callable[[float], np.ndarray]] = None,
    t0: float = 0.0,
) -> np.ndarray:
    """Forward-Euler integration of the Galerkin coefficient system."""
    a_of = alpha if callable(alpha) else (lambda _t: alpha)
    ap_of = alpha_prime if callable(alpha_prime) else (lambda _t: alpha_prime)
    c = np.array(coeffs, dtype=float)
    for k in range(n_steps):
        t = t0 + k * dt
        f = f_coeffs(t) if f_coeffs is not None else None
        c = c + dt * galerkin_rhs(c, a_of(t), ap_of(t), f)
    return c


def galerkin_exact_coeffs(m: int, alpha: float, t: float) -> float:
    """sqrt(pi) alpha^m t^(m/2) / (m/2)! for even m (1/sqrt(pi)-normalized basis)."""
    if m < 0 or m % 2:
        raise ValueError("closed form holds for even m >= 0 only; odd modes vanish")
    half = m // 2
    if half == 0:
        return math.sqrt(math.pi)
    if t == 0:
        return 0.0
    return math.sqrt(math.pi) * math.exp(
        m * math.log(alpha) + half * math.log(t) - math.lgamma(half + 1)
    )


def constant_alpha_series(x, t: float, alpha: float, n_terms: int):
    """exp(-a^2 x^2) sum_{l < n_terms} a^(2l) t^l / l! H_{2l}(a x).

    Terms are accumulated with orthonormal Hermite values and log-space
    prefactors, since H_{2l} alone overflows long before the series settles.
    """
    if not 0.0 <= t < 1.0:
        raise ValueError("series diverges for t >= 1")
    z = alpha * np.asarray(x, dtype=float)
    h_prev = np.zeros_like(z)
    h = np.ones_like(z)  # H_k / sqrt(2^k k!)
    total = np.zeros_like(z)
    for k in range(2 * n_terms - 1):
        if k % 2 == 0:
            ell = k // 2
            if ell == 0:
                total = total + h
            elif t > 0:
                log_c = (
                    2 * ell * math.log(alpha)
                    + ell * math.log(t)
                    - math.lgamma(ell + 1)
                    + 0.5 * (k * math.log(2.0) + math.lgamma(k + 1))
                )
                total = total + math.exp(log_c) * h
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * z * h - math.sqrt(k / (k + 1)) * h_prev
    out = np.exp(-z * z) * total
    return out if out.ndim else float(out)


def maclaurin_partial_sum(t: float, n_terms: int) -> float:
    """sum_{l < n_terms} (-1)^l (2l-1)!! / (2^l l!) t^l, the expansion of 1/sqrt(1+t)."""
    total, term = 0.0, 1.0
    for ell in range(n_terms):
        total += term
        term *= -(2 * ell + 1) / (2.0 * (ell + 1)) * t
    return total


# -- error norms --------------------------------------------------------------


def default_fine_grid(n: int) -> np.ndarray:
    half = 5.0 if n >= 16 else 8.0
    return np.linspace(-half, half, 2001)


def error_norms(state: SpectralState, exact: Callable, fine_grid=None) -> tuple[float, float, float]:
    """(N1, N2, N3): nodal l2, fine-grid max, and quadrature-weighted nodal l2."""
    basis = state.basis
    grid = default_fine_grid(basis.n) if fine_grid is None else np.asarray(fine_grid, dtype=float)
    err = np.abs(exact(basis.nodes, state.t) - state.u_at_nodes())
    n1 = float(np.sqrt(np.sum(err**2)))
    n2 = float(np.max(np.abs(exact(grid, state.t) - state.evaluate(grid))))
    n3 = float(np.sqrt(np.sum(err**2 * basis.weights)))
    return n1, n2, n3


__all__ = [
    "HOMOGENEOUS",
    "NONHOMOGENEOUS",
    "ProblemSpec",
    "SpectralState",
    "alpha_homogeneous",
    "alpha_nonhomogeneous",
    "collocation_rhs",
    "constant_alpha_series",
    "error_norms",
    "euler_step",
    "exact_homogeneous",
    "exact_nonhomogeneous",
    "forcing_nonhomogeneous",
    "galerkin_euler",
    "galerkin_exact_coeffs",
    "galerkin_rhs",
    "maclaurin_partial_sum",
    "run_segment",
    "state_coefficients",
    "state_from_coefficients",
    "switch_alpha",
]
