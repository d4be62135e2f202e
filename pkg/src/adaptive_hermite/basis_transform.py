"""Point values <-> Fourier coefficients, and changes of the scaling factor.

Coefficient convention: an :class:`Expansion` with scaling ``alpha`` and
coefficients ``c`` represents

    v(x) = exp(-alpha^2 x^2) * sum_l c_l H_l(alpha x),

so a unit Gaussian exp(-alpha^2 x^2) has c = e_0. The Galerkin literature
normalizes by 1/sqrt(pi) instead; multiply by sqrt(pi) to convert.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hermite_core import HermiteBasis, hermite_eval_all

COND_WARN = 1e8
EXP_LIMIT = 700.0


class RepresentationRangeError(ArithmeticError):
    """Quadrature-ready samples overflowed (node range too wide for exp(+xi^2))."""


class AlphaJumpError(ArithmeticError):
    """The requested change of scaling factor overflows exp()."""


class AlphaRangeWarning(RuntimeWarning):
    """Basis-change matrix is badly conditioned for the requested scaling factors."""


@dataclass(frozen=True, eq=False)
class Expansion:
    alpha: float
    coeffs: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")


@dataclass(frozen=True, eq=False)
class NodalFunction:
    """Samples ``values[j] = v(xi_j / alpha) * exp(xi_j^2)``."""

    alpha: float
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise RepresentationRangeError("nodal samples are not finite")


def _norms(n: int) -> np.ndarray:
    """2^m m! sqrt(pi) for m < n."""
    m = np.arange(n)
    return np.exp(m * math.log(2.0) + np.array([math.lgamma(k + 1) for k in m])) * math.sqrt(
        math.pi
    )


def nodal_samples(basis: HermiteBasis, v, alpha: float = 1.0) -> NodalFunction:
    """Build quadrature-ready samples of a physical function ``v``."""
    xi = basis.nodes
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(v(xi / alpha), dtype=float) * np.exp(xi**2)
    return NodalFunction(alpha, values)


def pv_to_fc(basis: HermiteBasis, nodal: NodalFunction) -> Expansion:
    """Fourier coefficients from quadrature-ready point values.

    c_m = sum_j values_j H_m(xi_j) w_j / (2^m m! sqrt(pi)).
    """
    values = np.asarray(nodal.values, dtype=float)
    if values.shape != (basis.n,):
        raise ValueError(f"expected {basis.n} samples, got {values.shape}")
    h = hermite_eval_all(basis.n - 1, basis.nodes)
    coeffs = (h @ (values * basis.weights)) / _norms(basis.n)
    if not np.all(np.isfinite(coeffs)):
        raise RepresentationRangeError("Fourier coefficients are not finite")
    return Expansion(nodal.alpha, coeffs)


def fc_to_pv(basis: HermiteBasis, exp: Expansion) -> NodalFunction:
    """Inverse of :func:`pv_to_fc`: values_j = sum_l c_l H_l(xi_j)."""
    coeffs = np.asarray(exp.coeffs, dtype=float)
    if coeffs.shape != (basis.n,):
        raise ValueError(f"expected {basis.n} coefficients, got {coeffs.shape}")
    h = hermite_eval_all(basis.n - 1, basis.nodes)
    return NodalFunction(exp.alpha, coeffs @ h)


_matrix_cache: dict[tuple, np.ndarray] = {}
_cache_lock = threading.Lock()


def alpha_change_matrix(basis: HermiteBasis, alpha_src: float, alpha_dst: float) -> np.ndarray:
    """N x N matrix taking coefficients at ``alpha_src`` to ``alpha_dst``.

    With r = alpha_dst / alpha_src,
    T[m, l] = r / (2^m m! sqrt(pi)) * sum_j H_l(xi_j) H_m(r xi_j) w_j.
    The integrand is a polynomial of degree < 2N so the rule is exact, and T
    is lower triangular.
    """
    key = (round(alpha_src, 12), round(alpha_dst, 12), basis.n)
    cached = _matrix_cache.get(key)
    if cached is not None:
        return cached
    r = alpha_dst / alpha_src
    h_src = hermite_eval_all(basis.n - 1, basis.nodes)
    h_dst = hermite_eval_all(basis.n - 1, r * basis.nodes)
    mat = r * (h_dst * basis.weights) @ h_src.T / _norms(basis.n)[:, None]
    mat.setflags(write=False)
    with _cache_lock:
        _matrix_cache.setdefault(key, mat)
    return mat


def change_alpha_fc(basis: HermiteBasis, exp: Expansion, new_alpha: float) -> Expansion:
    """Re-express an expansion in the basis with scaling factor ``new_alpha``."""
    mat = alpha_change_matrix(basis, exp.alpha, new_alpha)
    meta = {}
    cond = np.linalg.cond(mat)
    if not cond < COND_WARN:
        msg = f"alpha change {exp.alpha:g} -> {new_alpha:g} has condition number {cond:.3e}"
        warnings.warn(msg, AlphaRangeWarning, stacklevel=2)
        meta["warning"] = msg
    meta["condition"] = float(cond)
    return Expansion(new_alpha, mat @ np.asarray(exp.coeffs, dtype=float), meta)


def rescale_point_values(
    basis: HermiteBasis, p_old_at_nodes, alpha_old: float, alpha_new: float
) -> np.ndarray:
    """p_new(xi_j) = p_old(xi_j) exp((alpha_new^2 - alpha_old^2) xi_j^2)."""
    p = np.asarray(p_old_at_nodes, dtype=float)
    expo = (alpha_new**2 - alpha_old**2) * basis.nodes**2
    if np.max(expo) > EXP_LIMIT:
        raise AlphaJumpError(
            f"alpha jump {alpha_old:g} -> {alpha_new:g} overflows on the node range"
        )
    return p * np.exp(expo)


def barycentric_interpolate(basis: HermiteBasis, values, x) -> np.ndarray:
    """Evaluate the degree N-1 interpolant through (xi_j, values_j) at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    values = np.asarray(values, dtype=float)
    diff = x[:, None] - basis.nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = basis.bary / diff
    out = (terms @ values) / terms.sum(axis=1)
    hit_rows, hit_cols = np.nonzero(exact)
    out[hit_rows] = values[hit_cols]
    return out


def evaluate_hermite_function(p_at_nodes, basis: HermiteBasis, alpha: float, x_grid) -> np.ndarray:
    """u(x) = p_N(x) exp(-alpha^2 x^2), with p_N the nodal interpolant in x."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    return barycentric_interpolate(basis, p_at_nodes, x) * np.exp(-(alpha * x) ** 2)


def admissible_alpha_interval(basis: HermiteBasis) -> tuple[float, float]:
    """Heuristic range of scaling factors the N-node basis can resolve.

    Upper end: at least ceil(N/2) nodes must see the Gaussian above 1e-8.
    Lower end: the Gaussian must have dropped to 1/2 by the outermost node,
    otherwise every node sits on the flat top of the weight.
    """
    xi = np.sort(np.abs(basis.nodes))
    k = math.ceil(basis.n / 2)
    r = xi[k - 1]
    hi = math.sqrt(-math.log(1e-8)) / r if r > 0 else math.inf
    lo = math.sqrt(math.log(2.0)) / xi[-1] if xi[-1] > 0 else 0.0
    return lo, hi
