"""Orthonormality and Brownian-variance identities of the basis families.

The quadrature oracle is a composite midpoint rule on a dyadic grid: exact
for the piecewise-constant family (cell edges align with the jump points)
and well below the asserted tolerances for the smooth families.
"""

from __future__ import annotations

import numpy as np
import pytest

from seukf.basis import (
    FourierSineBasis,
    HaarBasis,
    IndexOutOfRange,
    LinearOptimalBasis,
    make_basis,
    make_linear_optimal_basis,
    reconstruct_path,
)

HORIZON = 8.0
CELLS = 1 << 14


def midpoint_gram(basis) -> np.ndarray:
    h = basis.horizon / CELLS
    t = (np.arange(CELLS) + 0.5) * h
    vals = np.array([basis.values(ti) for ti in t])  # (CELLS, order)
    return h * vals.T @ vals


@pytest.mark.parametrize(
    "basis",
    [
        FourierSineBasis(HORIZON, 8),
        HaarBasis(HORIZON, 8),
        HaarBasis(HORIZON, 5),
        LinearOptimalBasis(HORIZON, 6, theta=0.7),
        LinearOptimalBasis(2.0, 4, theta=-0.4),
    ],
    ids=["sine", "haar8", "haar5", "linopt", "linopt_neg"],
)
def test_orthonormal_by_quadrature(basis):
    gram = midpoint_gram(basis)
    np.testing.assert_allclose(gram, np.eye(basis.order), atol=5e-7)


@pytest.mark.parametrize("family", ["fourier_sine", "haar"])
def test_integrals_are_running_integrals(family):
    basis = make_basis(family, HORIZON, 8)
    h = HORIZON / CELLS
    mids = (np.arange(CELLS) + 0.5) * h
    running = np.zeros(basis.order)
    # Cumulative midpoint sums hit every dyadic checkpoint exactly for the
    # piecewise-constant family and to O(h^2) for the smooth one.
    checkpoints = {int(CELLS * k / 16) for k in range(1, 17)}
    for cell, t_mid in enumerate(mids, start=1):
        running += basis.values(t_mid) * h
        if cell in checkpoints:
            np.testing.assert_allclose(
                running, basis.integrals(cell * h), atol=1e-7
            )


def test_sine_brownian_variance_identity():
    # Sum of squared terminal integrals telescopes to T * sum 8/((2k-1) pi)^2.
    for order in (1, 4, 8, 16):
        basis = FourierSineBasis(HORIZON, order)
        var = float(np.sum(basis.integrals(HORIZON) ** 2))
        k = np.arange(1, order + 1)
        analytic = HORIZON * np.sum(8.0 / ((2.0 * k - 1.0) ** 2 * np.pi**2))
        np.testing.assert_allclose(var, analytic, rtol=1e-12)


def test_haar_dyadic_variance_exact():
    # With order 2^J the surrogate agrees with Brownian motion on the dyadic
    # grid: Var(W_hat(t)) = t and Cov(W_hat(s), W_hat(t)) = min(s, t).
    order = 8
    basis = HaarBasis(HORIZON, order)
    grid = HORIZON * np.arange(9) / 8.0
    for s in grid:
        for t in grid:
            cov = float(basis.integrals(s) @ basis.integrals(t))
            np.testing.assert_allclose(cov, min(s, t), atol=1e-12)


def test_haar_off_dyadic_variance_below_t():
    basis = HaarBasis(HORIZON, 8)
    t = 0.3 * HORIZON
    var = float(np.sum(basis.integrals(t) ** 2))
    assert var < t


def test_haar_level_structure():
    basis = HaarBasis(HORIZON, 8)
    # Index 1 is the constant; index 2 the full-width wavelet; indices 5..8
    # sit at the finest level with disjoint quarter supports.
    assert basis.value(1, 0.1) == pytest.approx(1.0 / np.sqrt(HORIZON))
    assert basis.value(2, 0.0) == pytest.approx(1.0 / np.sqrt(HORIZON))
    assert basis.value(2, HORIZON / 2.0) == pytest.approx(-1.0 / np.sqrt(HORIZON))
    fine = np.array([basis.values(t)[4:] for t in (0.5, 2.5, 4.5, 6.5)])
    assert np.count_nonzero(fine) == 4
    np.testing.assert_allclose(np.diag(fine), 2.0 / np.sqrt(HORIZON))


def test_scalar_accessors_match_vector_forms():
    basis = FourierSineBasis(HORIZON, 5)
    t = 1.234
    for i in range(1, 6):
        assert basis.value(i, t) == basis.values(t)[i - 1]
        assert basis.integral(i, t) == basis.integrals(t)[i - 1]


@pytest.mark.parametrize("bad", [0, 6, -1])
def test_index_out_of_range(bad):
    basis = FourierSineBasis(HORIZON, 5)
    with pytest.raises(IndexOutOfRange):
        basis.value(bad, 1.0)


def test_constructor_validation():
    with pytest.raises(ValueError, match="horizon"):
        FourierSineBasis(0.0, 4)
    with pytest.raises(ValueError, match="order"):
        HaarBasis(1.0, 0)
    with pytest.raises(ValueError, match="unknown basis family"):
        make_basis("legendre", 1.0, 4)


@pytest.mark.parametrize("family", ["fourier_sine", "haar"])
def test_with_horizon_rescales(family):
    basis = make_basis(family, HORIZON, 6)
    shrunk = basis.with_horizon(2.0)
    assert shrunk.horizon == 2.0
    assert shrunk.order == basis.order
    assert shrunk.family == basis.family
    # Still orthonormal on the new interval.
    gram = midpoint_gram(shrunk)
    np.testing.assert_allclose(gram, np.eye(6), atol=5e-7)


def test_linear_optimal_first_function_is_exponential():
    theta = 0.6
    basis = make_linear_optimal_basis(theta, HORIZON, 3)
    t = np.array([0.5, 1.5, 3.0])
    first = np.array([basis.values(ti)[0] for ti in t])
    # phi_1(t) = exp(theta t) / norm: ratios eliminate the normalization.
    np.testing.assert_allclose(
        first[1:] / first[0], np.exp(theta * (t[1:] - t[0])), rtol=1e-10
    )
    assert basis.orthogonality_residual < 1e-8


def test_linear_optimal_kills_higher_terms_at_horizon():
    # For dX = -theta X dt + dW the terms i >= 2 contribute nothing to the
    # terminal value: int_0^T exp(-theta (T-u)) phi_i(u) du = 0 because
    # phi_i is orthogonal to exp(theta u) by construction.
    theta = 0.5
    basis = make_linear_optimal_basis(theta, HORIZON, 4)
    h = basis.horizon / CELLS
    mids = (np.arange(CELLS) + 0.5) * h
    kernel = np.exp(-theta * (basis.horizon - mids))
    for i in range(2, 5):
        vals = np.array([basis.values(t)[i - 1] for t in mids])
        assert abs(h * np.sum(kernel * vals)) < 1e-6


def test_linear_optimal_first_term_matches_ou_variance():
    # The surviving term carries exactly the stationary-kernel weight
    # sqrt((1 - exp(-2 theta T)) / (2 theta)).
    theta = 0.5
    basis = make_linear_optimal_basis(theta, HORIZON, 4)
    h = basis.horizon / CELLS
    mids = (np.arange(CELLS) + 0.5) * h
    kernel = np.exp(-theta * (basis.horizon - mids))
    vals = np.array([basis.values(t)[0] for t in mids])
    weight = h * np.sum(kernel * vals)
    exact = np.sqrt((1.0 - np.exp(-2.0 * theta * HORIZON)) / (2.0 * theta))
    np.testing.assert_allclose(abs(weight), exact, rtol=1e-6)


def test_reconstruct_path_is_weighted_integral_sum(rng):
    basis = FourierSineBasis(HORIZON, 6)
    coeffs = rng.standard_normal((6, 3))
    t = 2.75
    manual = sum(coeffs[i] * basis.integral(i + 1, t) for i in range(6))
    np.testing.assert_allclose(reconstruct_path(basis, coeffs, t), manual, rtol=1e-12)


def test_reconstruct_path_shape_checked(rng):
    basis = FourierSineBasis(HORIZON, 6)
    with pytest.raises(ValueError, match="coeffs"):
        reconstruct_path(basis, rng.standard_normal((5, 3)), 1.0)
