"""Exception hierarchy for cox-reduce.

Every error carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_BUDGET = 5


class CoxReduceError(Exception):
    """Base class for all library errors."""

    exit_code = EXIT_NUMERICAL


class ConfigError(CoxReduceError, ValueError):
    """Invalid configuration, reported before any fitting starts."""

    exit_code = EXIT_CONFIG


class DataError(CoxReduceError, ValueError):
    """Unreadable or malformed input data."""

    exit_code = EXIT_DATA


class NumericalError(CoxReduceError, ArithmeticError):
    """A numerical failure that stops the computation."""

    exit_code = EXIT_NUMERICAL


class RankDeficientError(NumericalError, ValueError):
    """Numerical rank of a design block is below its column count."""

    def __init__(self, rank: int, columns: int, message: str = ""):
        self.rank = rank
        self.columns = columns
        super().__init__(
            message or f"Design has numerical rank {rank} < {columns} columns"
        )


class ZeroVectorError(NumericalError, ValueError):
    """A correlation was requested for a vector of (numerically) zero norm."""


class OverlappingSetsError(ConfigError):
    """Index sets that must be disjoint share members."""


class NotNestedError(ConfigError):
    """A submodel design uses columns absent from the comprehensive design."""


class DegenerateResidualError(NumericalError):
    """Estimated residual scale is zero (perfect fit)."""


class ArrangementOverflowError(ConfigError):
    """More indices than cells in the requested hypercube."""


class TooSmallError(ConfigError):
    """A sample split would leave a part with fewer than two observations."""


class BudgetExceededError(CoxReduceError):
    """Enumerating the confidence set would test too many models."""

    exit_code = EXIT_BUDGET

    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(
            f"Confidence set would test {count} models, above the budget of {budget}"
        )


class ConvergenceError(NumericalError):
    """Coordinate descent did not reach its KKT tolerance."""

    def __init__(self, gap: float, sweeps: int):
        self.gap = gap
        self.sweeps = sweeps
        super().__init__(f"No convergence after {sweeps} sweeps (KKT gap {gap:.3e})")


class ReductionError(NumericalError):
    """Reduction could not bring the retained set below the sample size."""


class GeneratorSelfTestError(NumericalError):
    """Simulated covariates failed their moment self-test."""
