import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite as nph

from adaptive_hermite.hermite_core import (
    MAX_NODES,
    BasisConstructionError,
    HermiteBasis,
    compute_nodes,
    compute_weights,
    diff_matrices,
    gauss_hermite_integrate,
    hermite_basis,
    hermite_eval,
    hermite_eval_all,
    log_abs_hermite,
)

SQRT_PI = math.sqrt(math.pi)


# -- polynomial evaluation ------------------------------------------------------


@pytest.mark.parametrize("n, z, expected", [(0, 3.7, 1.0), (1, 2.0, 4.0), (3, 1.0, -4.0)])
def test_hermite_eval_examples(n, z, expected):
    assert hermite_eval(n, z) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize(
    "n_max, z, expected",
    [(2, 0.0, [1, 0, -2]), (1, 1.0, [1, 2]), (3, 1.0, [1, 2, 2, -4])],
)
def test_hermite_eval_all_examples(n_max, z, expected):
    np.testing.assert_allclose(hermite_eval_all(n_max, z), expected, atol=1e-14)


def test_hermite_eval_matches_numpy_hermval(rng):
    z = rng.uniform(-5, 5, 50)
    for n in range(0, 25):
        ref = nph.hermval(z, np.eye(n + 1)[n])
        np.testing.assert_allclose(hermite_eval(n, z), ref, rtol=0, atol=1e-12 * max(1.0, np.abs(ref).max()))


def test_log_abs_hermite_survives_large_degree():
    z = np.array([0.3, 2.0, 9.0])
    direct = np.log(np.abs(hermite_eval(40, z)))
    np.testing.assert_allclose(log_abs_hermite(40, z), direct, rtol=1e-12)
    assert np.all(np.isfinite(log_abs_hermite(400, z)))


# -- nodes and weights ------------------------------------------------------------


def test_nodes_small_cases():
    np.testing.assert_allclose(compute_nodes(1), [0.0], atol=1e-15)
    np.testing.assert_allclose(compute_nodes(2), [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    np.testing.assert_allclose(compute_nodes(3), [-math.sqrt(1.5), 0.0, math.sqrt(1.5)], atol=1e-15)


def test_weights_small_cases():
    np.testing.assert_allclose(compute_weights(1, compute_nodes(1)), [SQRT_PI], rtol=1e-15)
    np.testing.assert_allclose(compute_weights(2, compute_nodes(2)), [SQRT_PI / 2] * 2, rtol=1e-14)
    assert compute_weights(16, compute_nodes(16)).sum() == pytest.approx(SQRT_PI, abs=1e-12)


@pytest.mark.parametrize("n", [4, 8, 10, 16, 32])
def test_nodes_and_weights_match_high_precision_oracle(n, oracles):
    ref = np.array(oracles["gauss_hermite"][str(n)], dtype=float)
    basis = hermite_basis(n)
    np.testing.assert_allclose(basis.nodes, ref[:, 0], rtol=0, atol=1e-13 * max(1.0, abs(ref[:, 0]).max()))
    np.testing.assert_allclose(basis.weights, ref[:, 1], rtol=1e-11)


def test_nodes_are_symmetric_sorted_and_roots():
    for n in (5, 12, 33, 120):
        x = compute_nodes(n)
        assert np.all(np.diff(x) > 0)
        np.testing.assert_allclose(x, -x[::-1], atol=1e-13)
    x = compute_nodes(20)
    np.testing.assert_allclose(hermite_eval(20, x) / np.abs(hermite_eval(20, x + 0.1)), 0, atol=1e-10)


def test_large_n_weights_do_not_overflow():
    b = hermite_basis(MAX_NODES)
    assert np.all(np.isfinite(b.weights)) and np.all(b.weights >= 0)
    assert b.weights.sum() == pytest.approx(SQRT_PI, rel=1e-10)


@pytest.mark.parametrize("bad", [0, -3, MAX_NODES + 1])
def test_basis_rejects_bad_sizes(bad):
    with pytest.raises((BasisConstructionError, ValueError)):
        HermiteBasis.build(bad)


def test_basis_is_cached_and_immutable():
    b = hermite_basis(10)
    assert hermite_basis(10) is b
    with pytest.raises(Exception):
        b.n = 11


# -- quadrature -------------------------------------------------------------------


def test_integrate_examples():
    for n in (1, 3, 10):
        b = hermite_basis(n)
        assert gauss_hermite_integrate(b, np.ones(n)) == pytest.approx(SQRT_PI, abs=1e-13)
        assert abs(gauss_hermite_integrate(b, b.nodes)) < 1e-14
    b2 = hermite_basis(2)
    assert gauss_hermite_integrate(b2, b2.nodes**2) == pytest.approx(SQRT_PI / 2, abs=1e-14)


def _moment(k: int) -> float:
    # integral of x^k exp(-x^2) over the real line
    return 0.0 if k % 2 else math.gamma((k + 1) / 2)


@pytest.mark.parametrize("n", [4, 8, 10, 16, 32])
def test_quadrature_exact_for_random_polynomials(n, rng):
    b = hermite_basis(n)
    for _ in range(50):
        c = rng.uniform(-1, 1, 2 * n)
        exact = sum(ck * _moment(k) for k, ck in enumerate(c))
        approx = gauss_hermite_integrate(b, np.polynomial.polynomial.polyval(b.nodes, c))
        scale = sum(abs(ck) * _moment(k) for k, ck in enumerate(c))
        assert abs(approx - exact) <= 1e-9 * scale


# -- appendix identities as properties ---------------------------------------------

zetas = st.floats(-5, 5, allow_nan=False)
degrees = st.integers(0, 20)


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _dh(ell, z):
    """H_l'(z) from the power-series coefficients, independent of the recurrence."""
    poly = nph.herm2poly(np.eye(ell + 1)[ell])
    return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(poly))


def _d2h(ell, z):
    poly = nph.herm2poly(np.eye(ell + 1)[ell])
    return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(poly, 2))


@settings(max_examples=100, deadline=None)
@given(ell=st.integers(1, 20), z=zetas)
def test_derivative_identity(ell, z):
    assert _rel(_dh(ell, z), 2 * ell * hermite_eval(ell - 1, z)) < 1e-8


@settings(max_examples=100, deadline=None)
@given(ell=degrees, z=zetas)
def test_second_derivative_relation(ell, z):
    lhs = 2 * z * _dh(ell, z)
    rhs = _d2h(ell, z) + 2 * ell * hermite_eval(ell, z)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs), abs(2 * ell * hermite_eval(ell, z)))


@settings(max_examples=100, deadline=None)
@given(ell=degrees, z=zetas)
def test_zeta_times_hermite(ell, z):
    lower = ell * hermite_eval(ell - 1, z) if ell >= 1 else 0.0
    rhs = lower + hermite_eval(ell + 1, z) / 2
    assert abs(z * hermite_eval(ell, z) - rhs) <= 1e-8 * max(1.0, abs(lower), abs(hermite_eval(ell + 1, z)))


@pytest.mark.parametrize("n", [4, 10, 16])
def test_orthogonality_by_quadrature(n):
    b = hermite_basis(n)
    h = hermite_eval_all(n - 1, b.nodes)
    for ell in range(n):
        for m in range(n):
            if ell + m >= 2 * n:
                continue
            val = gauss_hermite_integrate(b, h[ell] * h[m])
            norm = 2.0**m * math.factorial(m) * SQRT_PI
            if ell == m:
                assert val == pytest.approx(norm, rel=1e-8)
            else:
                assert abs(val) < 1e-8 * math.sqrt(norm * 2.0**ell * math.factorial(ell) * SQRT_PI)


# -- differentiation matrices ---------------------------------------------------------


def test_diff_matrix_examples():
    d1, d2 = diff_matrices(1, compute_nodes(1))
    np.testing.assert_array_equal(d1, [[0.0]])
    np.testing.assert_array_equal(d2, [[0.0]])
    x2 = compute_nodes(2)
    d1, _ = diff_matrices(2, x2)
    np.testing.assert_allclose(d1 @ x2, [1.0, 1.0], atol=1e-12)
    b = hermite_basis(10)
    np.testing.assert_allclose(b.d1.sum(axis=1), 0.0, atol=1e-10)


@pytest.mark.parametrize("n", [3, 8, 16])
def test_diff_matrices_differentiate_polynomials_exactly(n, rng):
    b = hermite_basis(n)
    c = rng.uniform(-1, 1, n)
    pv = np.polynomial.polynomial.polyval(b.nodes, c)
    d1 = np.polynomial.polynomial.polyval(b.nodes, np.polynomial.polynomial.polyder(c))
    d2 = np.polynomial.polynomial.polyval(b.nodes, np.polynomial.polynomial.polyder(c, 2))
    scale = np.abs(b.nodes).max() ** n
    np.testing.assert_allclose(b.d1 @ pv, d1, atol=1e-10 * scale)
    np.testing.assert_allclose(b.d2 @ pv, d2, atol=1e-9 * scale)
    np.testing.assert_allclose(b.d2, b.d1 @ b.d1, atol=1e-12 * np.abs(b.d2).max())


def test_diff_matrix_diagonal_is_node():
    b = hermite_basis(12)
    np.testing.assert_allclose(np.diag(b.d1), b.nodes, atol=1e-12)
