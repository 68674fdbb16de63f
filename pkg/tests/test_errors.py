"""Tests for the exception hierarchy and its exit codes."""

import pytest

from cox_reduce.errors import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_NUMERICAL,
    ArrangementOverflowError,
    BudgetExceededError,
    ConfigError,
    ConvergenceError,
    CoxReduceError,
    DataError,
    RankDeficientError,
    ReductionError,
    TooSmallError,
)


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigError("x"), EXIT_CONFIG),
        (TooSmallError("x"), EXIT_CONFIG),
        (ArrangementOverflowError("x"), EXIT_CONFIG),
        (DataError("x"), EXIT_DATA),
        (RankDeficientError(2, 3), EXIT_NUMERICAL),
        (ReductionError("x"), EXIT_NUMERICAL),
        (ConvergenceError(1e-3, 10), EXIT_NUMERICAL),
        (BudgetExceededError(10, 5), EXIT_BUDGET),
    ],
)
def test_exit_codes(error, code):
    """Test that every error carries its CLI exit code."""
    assert isinstance(error, CoxReduceError)
    assert error.exit_code == code


def test_config_errors_are_value_errors():
    """Test that configuration errors can be caught as ValueError."""
    with pytest.raises(ValueError):
        raise ConfigError("bad")


def test_error_messages_carry_details():
    """Test that structured errors keep their fields and describe them."""
    error = BudgetExceededError(1234, 100)
    assert error.count == 1234 and error.budget == 100
    assert "1234" in str(error)
    assert "rank 2 < 3" in str(RankDeficientError(2, 3))
