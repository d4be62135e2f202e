"""Synthetic training corpora for the scaling-factor regressors.

Two families: scaled Gaussians H exp(-a^2 x^2) labelled by their width a,
and random clamped cubic splines labelled by the scaling factor of their
minimizing Hermite function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .basis_transform import NodalFunction, barycentric_interpolate, pv_to_fc
from .hermite_core import HermiteBasis

ALPHA_GRID_POINTS = 101
GOLDEN_TOL = 1e-4
DEGENERATE_MAX = 1e-12


class Representation(str, Enum):
    PV = "PV"
    FC = "FC"


@dataclass(frozen=True, eq=False)
class TrainingSample:
    features: np.ndarray
    target_alpha: float
    representation: Representation
    sample_id: int = 0


def default_fine_grid() -> np.ndarray:
    return np.linspace(-5.0, 5.0, 1001)


def pv_features(basis: HermiteBasis, u_at_nodes) -> np.ndarray:
    return np.array(u_at_nodes, dtype=float)


def fc_features(basis: HermiteBasis, u_at_nodes) -> np.ndarray:
    """First N Fourier coefficients at unit scaling, from values at the nodes.

    g_m = sum_j u(xi_j) exp(xi_j^2) H_m(xi_j) w_j / (2^m m! sqrt(pi))
    """
    values = np.asarray(u_at_nodes, dtype=float) * np.exp(basis.nodes**2)
    return pv_to_fc(basis, NodalFunction(1.0, values)).coeffs


def _featurize(basis, u_at_nodes, target, sample_id) -> list[TrainingSample]:
    return [
        TrainingSample(pv_features(basis, u_at_nodes), target, Representation.PV, sample_id),
        TrainingSample(fc_features(basis, u_at_nodes), target, Representation.FC, sample_id),
    ]


def gen_gaussian_samples(
    basis: HermiteBasis,
    count: int = 40,
    a_range: tuple[float, float] = (0.2, 0.6),
    h_range: tuple[float, float] = (0.0, 1.0),
    rng_seed: int = 0,
) -> list[TrainingSample]:
    """Gaussians H exp(-a^2 x^2) with (a, H) uniform; PV and FC sample per draw, target a."""
    rng = np.random.default_rng(rng_seed)
    a = rng.uniform(*a_range, size=count)
    h = rng.uniform(*h_range, size=count)
    samples = []
    for k in range(count):
        u = h[k] * np.exp(-((a[k] * basis.nodes) ** 2))
        samples.extend(_featurize(basis, u, float(a[k]), k))
    return samples


def gaussian_sample(basis: HermiteBasis, a: float, height: float) -> list[TrainingSample]:
    """PV and FC samples of a single Gaussian (no randomness)."""
    return _featurize(basis, height * np.exp(-((a * basis.nodes) ** 2)), a, 0)


# -- clamped cubic splines ------------------------------------------------------


class CubicSpline:
    """Clamped C^2 cubic on equispaced breaks over [-c, c], zero outside.

    Values and slopes vanish at both ends; the M interior values are free.
    """

    def __init__(self, support_halfwidth: float, break_values: Sequence[float]):
        self.support_halfwidth = float(support_halfwidth)
        self.break_values = np.asarray(break_values, dtype=float)
        m = self.break_values.size
        self.breaks = np.linspace(-self.support_halfwidth, self.support_halfwidth, m + 2)
        self.y = np.concatenate(([0.0], self.break_values, [0.0]))
        self.h = self.breaks[1] - self.breaks[0]
        self.moments = self._solve_moments()

    def _solve_moments(self) -> np.ndarray:
        """Second derivatives at the breaks from the clamped tridiagonal system."""
        y, h = self.y, self.h
        n = y.size
        ab = np.zeros((3, n))
        rhs = np.empty(n)
        ab[1, :] = 4.0 * h
        ab[1, 0] = ab[1, -1] = 2.0 * h
        ab[0, 1:] = h
        ab[2, :-1] = h
        # clamped ends: S'(-c) = S'(c) = 0
        rhs[0] = 6.0 * ((y[1] - y[0]) / h)
        rhs[-1] = -6.0 * ((y[-1] - y[-2]) / h)
        rhs[1:-1] = 6.0 * (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h
        return solve_banded((1, 1), ab, rhs)

    def _locate(self, x):
        i = np.clip(((x - self.breaks[0]) // self.h).astype(int), 0, self.breaks.size - 2)
        return i, self.breaks[i + 1] - x, x - self.breaks[i]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i, a, b = self._locate(x)
        mm, y, h = self.moments, self.y, self.h
        val = (
            mm[i] * a**3 / (6 * h)
            + mm[i + 1] * b**3 / (6 * h)
            + (y[i] / h - mm[i] * h / 6) * a
            + (y[i + 1] / h - mm[i + 1] * h / 6) * b
        )
        return np.where(np.abs(x) <= self.support_halfwidth, val, 0.0)

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i, a, b = self._locate(x)
        mm, y, h = self.moments, self.y, self.h
        val = (
            -mm[i] * a**2 / (2 * h)
            + mm[i + 1] * b**2 / (2 * h)
            + (y[i + 1] - y[i]) / h
            - (mm[i + 1] - mm[i]) * h / 6
        )
        return np.where(np.abs(x) <= self.support_halfwidth, val, 0.0)


def gen_spline(
    c: float, m_interior: int, value_cap: float, rng_seed, random_support: bool = False
) -> CubicSpline:
    """Random clamped spline with interior values uniform in [0, value_cap].

    With ``random_support`` the half-width is itself drawn uniformly from
    (0, c] before the values, so narrow profiles enter the corpus too.
    """
    if m_interior < 1 or c <= 0:
        raise ValueError("need m_interior >= 1 and c > 0")
    rng = np.random.default_rng(rng_seed)
    half = c * (1.0 - rng.random()) if random_support else c
    return CubicSpline(half, rng.uniform(0.0, value_cap, size=m_interior))


# -- minimizing Hermite function -----------------------------------------------


def gamma(basis: HermiteBasis, profile, alpha: float, fine_grid: np.ndarray, s_fine=None) -> float:
    """Sup-norm mismatch between ``profile`` and its Hermite interpolant at ``alpha``."""
    xi = basis.nodes
    p_tilde = profile(xi) * np.exp((alpha * xi) ** 2)
    approx = barycentric_interpolate(basis, p_tilde, fine_grid) * np.exp(-((alpha * fine_grid) ** 2))
    s = profile(fine_grid) if s_fine is None else s_fine
    return float(np.max(np.abs(s - approx)))


def _golden_section(fun, lo: float, hi: float, tol: float) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass(frozen=True, eq=False)
class MinimizingHermite:
    alpha: float
    p_tilde_at_nodes: np.ndarray
    gamma_min: float
    alpha_grid: np.ndarray
    gamma_grid: np.ndarray


def minimizing_hermite_function(
    basis: HermiteBasis,
    profile,
    alpha_interval: tuple[float, float] = (0.5, 1.5),
    fine_grid: np.ndarray | None = None,
    grid_points: int = ALPHA_GRID_POINTS,
    tol: float = GOLDEN_TOL,
) -> MinimizingHermite:
    """Scaling factor whose Hermite interpolant best matches ``profile`` in sup norm.

    A uniform scan over ``alpha_interval`` picks the best grid point, then a
    golden-section search refines within its two neighbouring cells.
    """
    grid = default_fine_grid() if fine_grid is None else np.asarray(fine_grid, dtype=float)
    s_fine = profile(grid)

    def fun(a):
        return gamma(basis, profile, a, grid, s_fine)

    alphas = np.linspace(*alpha_interval, grid_points)
    gammas = np.array([fun(a) for a in alphas])
    i = int(np.argmin(gammas))
    best_a, best_g = float(alphas[i]), float(gammas[i])
    lo, hi = alphas[max(i - 1, 0)], alphas[min(i + 1, grid_points - 1)]
    if hi > lo:
        a_ref, g_ref = _golden_section(fun, lo, hi, tol)
        if g_ref < best_g:
            best_a, best_g = float(a_ref), float(g_ref)
    p_tilde = profile(basis.nodes) * np.exp((best_a * basis.nodes) ** 2)
    return MinimizingHermite(best_a, p_tilde, best_g, alphas, gammas)


def build_spline_corpus(
    basis: HermiteBasis,
    k: int = 40,
    m_interior: int = 5,
    c: float = 4.5,
    value_cap: float = 1.0,
    alpha_interval: tuple[float, float] = (0.5, 1.5),
    rng_seed: int = 0,
    fine_grid: np.ndarray | None = None,
    random_support: bool = False,
) -> list[TrainingSample]:
    """K labelled splines in both representations.

    PV features are S_k(xi_j); FC features come from the minimizing Hermite
    function's nodal values, which coincide with S_k(xi_j) by construction.
    Near-zero splines, and splines vanishing at every node, carry no width
    information and are redrawn.
    """
    root = np.random.SeedSequence(rng_seed)
    samples: list[TrainingSample] = []
    member = 0
    children = iter(root.spawn(10 * k + 10))
    while member < k:
        child = next(children, None)
        if child is None:
            raise ValueError(f"only {member} of {k} draws were non-degenerate splines")
        spline = gen_spline(c, m_interior, value_cap, child, random_support)
        if np.max(spline.break_values) < DEGENERATE_MAX:
            continue
        if np.max(np.abs(spline(basis.nodes))) < DEGENERATE_MAX:
            continue
        best = minimizing_hermite_function(basis, spline, alpha_interval, fine_grid)
        u_nodes = best.p_tilde_at_nodes * np.exp(-((best.alpha * basis.nodes) ** 2))
        samples.extend(_featurize(basis, u_nodes, best.alpha, member))
        member += 1
    return samples


# -- corpus helpers ---------------------------------------------------------------


def select(samples: Iterable[TrainingSample], representation) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and target vector for one representation."""
    rep = Representation(representation)
    chosen = [s for s in samples if s.representation == rep]
    if not chosen:
        raise ValueError(f"no {rep.value} samples in corpus")
    x = np.vstack([s.features for s in chosen])
    y = np.array([s.target_alpha for s in chosen])
    return x, y


def write_corpus_csv(samples: Sequence[TrainingSample], path, seed: int | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = samples[0].features.size if samples else 0
    with path.open("w", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "representation", "target_alpha"] + [f"f_{j + 1}" for j in range(n)])
        for s in samples:
            writer.writerow(
                [s.sample_id, s.representation.value, f"{s.target_alpha:.17g}"]
                + [f"{v:.17g}" for v in s.features]
            )
    return path


def read_corpus_csv(path) -> list[TrainingSample]:
    samples = []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if header[:3] != ["sample_id", "representation", "target_alpha"]:
            raise ValueError(f"{path}: unexpected corpus header {header[:3]}")
        for row in rows:
            samples.append(
                TrainingSample(
                    np.array([float(v) for v in row[3:]]),
                    float(row[2]),
                    Representation(row[1]),
                    int(row[0]),
                )
            )
    return samples
