"""Tests for the linear-algebra kernel."""

import numpy as np
import pytest

from cox_reduce.errors import (
    ConfigError,
    DataError,
    OverlappingSetsError,
    RankDeficientError,
    ZeroVectorError,
)
from cox_reduce.linalg_core import (
    as_matrix,
    block_corr,
    centre,
    centre_vector,
    cochran_decompose,
    corr,
    inverse_gram_form,
    least_squares,
    multiple_corr,
    numerical_rank,
    orthonormal_basis,
    project,
    residualise,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def test_centre_columns_have_zero_mean(rng):
    """Test that centring leaves every column with mean zero and keeps the means."""
    m = rng.normal(5.0, 2.0, size=(50, 4))
    view = centre(m)
    assert np.max(np.abs(view.values.mean(axis=0))) < 1e-13
    np.testing.assert_allclose(view.restore(), m, atol=1e-12)
    assert view.n == 50 and view.p == 4


def test_centre_needs_two_rows():
    """Test that centring a single observation is rejected."""
    with pytest.raises(DataError):
        centre(np.ones((1, 3)))


def test_centre_vector_returns_mean():
    """Test that centre_vector returns the centred vector and its mean."""
    vec, mean = centre_vector([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    np.testing.assert_allclose(vec, [-1.0, 0.0, 1.0], atol=1e-15)


def test_as_matrix_rejects_nan():
    """Test that non-finite input is a data error."""
    with pytest.raises(DataError):
        as_matrix([[1.0, np.nan]])


def test_least_squares_matches_normal_equations(rng):
    """Test that least squares agrees with the normal-equation solution."""
    x = rng.standard_normal((40, 5))
    y = rng.standard_normal(40)
    fit = least_squares(y, x)
    expected = np.linalg.solve(x.T @ x, x.T @ y)
    np.testing.assert_allclose(fit.coefficients, expected, rtol=1e-10)
    np.testing.assert_allclose(fit.residuals, y - x @ expected, atol=1e-10)
    np.testing.assert_allclose(fit.xtx_inv_diag, np.diag(np.linalg.inv(x.T @ x)), rtol=1e-10)
    assert fit.rank == 5


def test_least_squares_empty_design_returns_response(rng):
    """Test that regressing on no columns leaves the response as residual."""
    y = rng.standard_normal(10)
    fit = least_squares(y, np.zeros((10, 0)))
    assert fit.coefficients.shape == (0,)
    np.testing.assert_array_equal(fit.residuals, y)


def test_least_squares_rank_deficient(rng):
    """Test that duplicated columns raise RankDeficientError with the rank."""
    x = rng.standard_normal((20, 3))
    x = np.hstack([x, x[:, :1]])
    with pytest.raises(RankDeficientError) as exc_info:
        least_squares(rng.standard_normal(20), x)
    assert exc_info.value.rank == 3
    assert exc_info.value.columns == 4


def test_least_squares_row_mismatch(rng):
    """Test that a response of the wrong length is a data error."""
    with pytest.raises(DataError):
        least_squares(np.zeros(5), rng.standard_normal((6, 2)))


def test_rank_and_basis_are_tolerant(rng):
    """Test that rank and basis handle dependent columns without raising."""
    x = rng.standard_normal((30, 2))
    x = np.hstack([x, x.sum(axis=1, keepdims=True)])
    assert numerical_rank(x) == 2
    basis = orthonormal_basis(x)
    assert basis.shape == (30, 2)
    np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-12)


def test_project_and_residualise_are_complementary(rng):
    """Test that P y + (I - P) y = y and the residual is orthogonal to the span."""
    x = rng.standard_normal((25, 3))
    y = rng.standard_normal(25)
    fitted = project(y, x)
    residual = residualise(y, x)
    np.testing.assert_allclose(fitted + residual, y, atol=1e-12)
    np.testing.assert_allclose(x.T @ residual, np.zeros(3), atol=1e-10)


def test_inverse_gram_form(rng):
    """Test that the quadratic form matches an explicit inverse."""
    x = rng.standard_normal((30, 4))
    v = rng.standard_normal(4)
    expected = v @ np.linalg.inv(x.T @ x) @ v
    assert inverse_gram_form(x, v) == pytest.approx(expected, rel=1e-10)


def test_corr_is_clipped_and_symmetric(rng):
    """Test that corr of a vector with itself is one and stays within [-1, 1]."""
    u = rng.standard_normal(10)
    assert corr(u, u) == pytest.approx(1.0, abs=1e-15)
    assert corr(u, -u) == pytest.approx(-1.0, abs=1e-15)
    assert -1.0 <= corr(u, 3.0 * u + 1e-9) <= 1.0


def test_corr_zero_vector():
    """Test that a zero vector has no correlation."""
    with pytest.raises(ZeroVectorError):
        corr(np.zeros(4), np.ones(4))


def test_multiple_corr_matches_r_squared(rng):
    """Test that R(u, X) squared equals the regression R^2 of centred data."""
    x = centre(rng.standard_normal((50, 3))).values
    u, _ = centre_vector(x @ [1.0, 0.5, 0.0] + rng.standard_normal(50))
    fit = least_squares(u, x)
    r2 = 1.0 - fit.residual_norm**2 / (u @ u)
    assert multiple_corr(u, x) ** 2 == pytest.approx(r2, rel=1e-10)
    assert multiple_corr(u, np.zeros((50, 0))) == 0.0


def test_block_corr_matches_projector_norm(rng):
    """Test that block correlation equals the spectral norm of P_A P_B."""
    xa = rng.standard_normal((20, 2))
    xb = rng.standard_normal((20, 3))
    qa = orthonormal_basis(xa)
    qb = orthonormal_basis(xb)
    oracle = np.linalg.norm((qa @ qa.T) @ (qb @ qb.T), 2)
    value = block_corr(xa, xb)
    assert value == pytest.approx(oracle, abs=1e-10)
    assert value < 1.0


def test_block_corr_shared_column_is_one(rng):
    """Test that blocks sharing a column have block correlation one."""
    x = rng.standard_normal((20, 3))
    assert block_corr(x[:, :2], x[:, 1:]) == pytest.approx(1.0, abs=1e-12)


def test_block_corr_empty_block(rng):
    """Test that an empty block has zero block correlation."""
    assert block_corr(rng.standard_normal((10, 2)), np.zeros((10, 0))) == 0.0


def test_block_corr_rejects_rank_deficient_block(rng):
    """Test that a rank-deficient block is rejected."""
    x = rng.standard_normal((10, 2))
    with pytest.raises(RankDeficientError):
        block_corr(np.hstack([x, x[:, :1]]), rng.standard_normal((10, 2)))


def test_cochran_identity(rng):
    """Test that both sides of the omitted-variable decomposition agree."""
    x = rng.standard_normal((60, 6))
    y = x @ rng.standard_normal(6) + rng.standard_normal(60)
    lhs, rhs = cochran_decompose(y, [0, 1], [2, 3, 4, 5], x)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-10)


def test_cochran_empty_f_is_trivial(rng):
    """Test that with no omitted variables both sides coincide."""
    x = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    lhs, rhs = cochran_decompose(y, [0, 2], [], x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_cochran_rejects_bad_sets(rng):
    """Test that overlapping or empty E are configuration errors."""
    x = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    with pytest.raises(OverlappingSetsError):
        cochran_decompose(y, [0, 1], [1, 2], x)
    with pytest.raises(ConfigError):
        cochran_decompose(y, [], [1, 2], x)
