"""Tests for marginal screening and the coordinate-descent LASSO."""

import logging
import math

import numpy as np
import pytest

from cox_reduce.comparators import (
    lasso_fit,
    lasso_path,
    lasso_undertuned_support,
    marginal_screen,
)
from cox_reduce.errors import ConfigError, ConvergenceError


@pytest.fixture
def rng():
    return np.random.default_rng(31)


def _orthogonal_design(rng, n=50, k=5):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q * math.sqrt(n)


class TestMarginalScreen:
    def test_ranking_and_kept(self, rng):
        """Test that the strongest marginal correlations are kept, sorted by index."""
        x = rng.standard_normal((100, 6))
        y = 3.0 * x[:, 4] + 1.5 * x[:, 1] + 0.1 * rng.standard_normal(100)
        result = marginal_screen(y, x, 2)
        assert result.ranking[:2] == (4, 1)
        assert result.kept == (1, 4)
        assert result.to_record()["kept"] == [1, 4]

    def test_ties_go_to_lower_index(self, rng):
        """Test that equal correlations rank the lower index first."""
        x = rng.standard_normal((40, 4))
        x[:, 3] = x[:, 1]
        y = x[:, 1] + 0.01 * rng.standard_normal(40)
        result = marginal_screen(y, x, 1)
        assert result.ranking[:2] == (1, 3)
        assert result.kept == (1,)

    def test_zero_column_has_zero_correlation(self, rng):
        """Test that a zero column ranks with correlation zero."""
        x = rng.standard_normal((30, 3))
        x[:, 0] = 0.0
        result = marginal_screen(rng.standard_normal(30), x, 3)
        assert result.correlations[0] == 0.0
        assert result.kept == (0, 1, 2)

    def test_s_hat_must_be_positive(self, rng):
        """Test that asking for no variables is a configuration error."""
        with pytest.raises(ConfigError):
            marginal_screen(np.zeros(5), rng.standard_normal((5, 2)), 0)


class TestLasso:
    def test_orthogonal_design_is_soft_threshold(self, rng):
        """Test that on an orthogonal design the solution soft-thresholds x^T y / n."""
        n = 50
        x = _orthogonal_design(rng, n)
        y = x @ np.array([2.0, -1.0, 0.5, 0.0, 0.1]) + 0.1 * rng.standard_normal(n)
        lam = 0.3
        rho = x.T @ y / n
        expected = np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0)
        np.testing.assert_allclose(lasso_fit(y, x, lam), expected, atol=1e-8)

    def test_path_starts_empty_and_meets_kkt(self, rng):
        """Test that the path starts at the empty model and every point meets KKT."""
        x = rng.standard_normal((60, 8))
        y = x[:, 0] - x[:, 3] + rng.standard_normal(60)
        path = lasso_path(y, x, n_lambdas=20, ratio=1e-2)
        assert path.supports[0] == ()
        assert max(path.kkt_gaps) <= 1e-9
        assert len(path.lambdas) == 20
        assert np.all(np.diff(path.lambdas) < 0)
        assert len(path.supports[-1]) >= len(path.supports[0])

    def test_zero_column_stays_out(self, rng):
        """Test that a zero column never enters the model."""
        x = rng.standard_normal((40, 4))
        x[:, 2] = 0.0
        y = x[:, 0] + rng.standard_normal(40)
        coefficients = lasso_fit(y, x, 1e-3)
        assert coefficients[2] == 0.0

    def test_negative_lambda(self, rng):
        """Test that a negative penalty is rejected."""
        with pytest.raises(ConfigError):
            lasso_fit(np.zeros(5), rng.standard_normal((5, 2)), -1.0)

    def test_convergence_error(self, rng):
        """Test that running out of sweeps reports the remaining KKT gap."""
        x = rng.standard_normal((30, 5))
        y = x[:, 0] + rng.standard_normal(30)
        with pytest.raises(ConvergenceError) as exc_info:
            lasso_fit(y, x, 1e-3, max_sweeps=0)
        assert exc_info.value.sweeps == 0
        assert exc_info.value.gap > 0


class TestUndertuned:
    def test_reaches_target(self, rng):
        """Test that the walk stops at the first lambda whose support reaches the target."""
        x = rng.standard_normal((100, 10))
        y = 2.0 * x[:, 2] + 1.5 * x[:, 7] + rng.standard_normal(100)
        result = lasso_undertuned_support(y, x, 2)
        assert not result.exhausted
        assert len(result.support) >= 2
        assert {2, 7} <= set(result.support)
        assert result.to_record()["grid_exhausted"] is False

    def test_exhausted_grid_warns(self, rng, caplog):
        """Test that an unreachable target returns the last support with a warning."""
        x = rng.standard_normal((40, 3))
        y = x @ [1.0, 1.0, 1.0] + rng.standard_normal(40)
        with caplog.at_level(logging.WARNING):
            result = lasso_undertuned_support(y, x, 5, n_lambdas=10)
        assert result.exhausted
        assert len(result.support) <= 3
        assert "grid exhausted" in caplog.text
