"""Baseline reductions: marginal screening and an undertuned LASSO."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError, ConvergenceError, DataError
from .linalg_core import ZERO_NORM, as_matrix, as_vector

logger = logging.getLogger(__name__)

MAX_SWEEPS = 10_000
KKT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ScreeningResult:
    """Columns ranked by absolute marginal correlation with the response."""

    ranking: Tuple[int, ...]
    kept: Tuple[int, ...]
    correlations: np.ndarray

    def to_record(self) -> Dict[str, Any]:
        return {
            "method": "marginal",
            "kept": list(self.kept),
            "ranking": list(self.ranking),
            "abs_correlations": [float(abs(self.correlations[j])) for j in self.ranking],
        }


def marginal_screen(y, x, s_hat: int) -> ScreeningResult:
    """Keep the ``s_hat`` columns with the largest |corr(y, x_j)|; ties go to the lower index.

    Zero-norm columns (and a zero response) have correlation 0.
    """
    if s_hat < 1:
        raise ConfigError(f"s_hat must be at least 1, got {s_hat}")
    y = as_vector(y)
    x = as_matrix(x)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"Response has {y.shape[0]} observations but design has {x.shape[0]}")

    norms = np.linalg.norm(x, axis=0) * np.linalg.norm(y)
    correlations = np.zeros(x.shape[1])
    usable = norms > ZERO_NORM
    correlations[usable] = (x[:, usable].T @ y) / norms[usable]

    ranking = tuple(int(j) for j in np.argsort(-np.abs(correlations), kind="stable"))
    kept = tuple(sorted(ranking[: min(s_hat, x.shape[1])]))
    return ScreeningResult(ranking=ranking, kept=kept, correlations=correlations)


class _Standardised:
    """Columns rescaled so that |z_j|^2 / n = 1; zero columns are left out of the fit."""

    def __init__(self, y, x):
        self.y = as_vector(y)
        x = as_matrix(x)
        if x.shape[0] != self.y.shape[0]:
            raise DataError(
                f"Response has {self.y.shape[0]} observations but design has {x.shape[0]}"
            )
        self.n, self.p = x.shape
        scale = np.sqrt(np.sum(x**2, axis=0) / self.n)
        self.usable = scale > ZERO_NORM
        self.scale = np.where(self.usable, scale, 1.0)
        self.z = np.where(self.usable, x / self.scale, 0.0)

    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.z.T @ self.y)) / self.n) if self.p else 0.0

    def kkt_gap(self, b: np.ndarray, residual: np.ndarray, lam: float) -> float:
        gradient = self.z.T @ residual / self.n
        active = b != 0.0
        gaps = np.where(
            active,
            np.abs(gradient - lam * np.sign(b)),
            np.maximum(np.abs(gradient) - lam, 0.0),
        )
        gaps[~self.usable] = 0.0
        return float(np.max(gaps)) if gaps.size else 0.0

    def solve(
        self, lam: float, start: Optional[np.ndarray], max_sweeps: int, tol: float
    ) -> Tuple[np.ndarray, float]:
        b = np.zeros(self.p) if start is None else start.copy()
        residual = self.y - self.z @ b
        columns = np.flatnonzero(self.usable)
        gap = self.kkt_gap(b, residual, lam)
        sweeps = 0
        while gap > tol:
            if sweeps >= max_sweeps:
                raise ConvergenceError(gap, sweeps)
            for j in columns:
                old = b[j]
                rho = self.z[:, j] @ residual / self.n + old
                new = np.sign(rho) * max(abs(rho) - lam, 0.0)
                if new != old:
                    residual -= self.z[:, j] * (new - old)
                    b[j] = new
            sweeps += 1
            gap = self.kkt_gap(b, residual, lam)
        return b, gap


def lasso_fit(
    y, x, lam: float, max_sweeps: int = MAX_SWEEPS, tol: float = KKT_TOLERANCE
) -> np.ndarray:
    """Coordinate-descent minimiser of (1/2n)|y - Zb|^2 + lam |b|_1.

    Z is ``x`` with columns standardised to |z_j|^2 / n = 1; the returned
    coefficients are on the original column scale.

    Raises:
        ConvergenceError: when the KKT gap is still above ``tol`` after ``max_sweeps``.
    """
    if not lam >= 0:
        raise ConfigError(f"lambda must be non-negative, got {lam}")
    problem = _Standardised(y, x)
    b, _ = problem.solve(lam, None, max_sweeps, tol)
    return b / problem.scale


@dataclass(frozen=True)
class LassoPath:
    """Warm-started solutions over a descending lambda grid."""

    lambdas: np.ndarray
    coefficients: np.ndarray
    supports: Tuple[Tuple[int, ...], ...]
    kkt_gaps: Tuple[float, ...]


def _grid(lambda_max: float, n_lambdas: int, ratio: float) -> np.ndarray:
    if n_lambdas < 1:
        raise ConfigError(f"need at least one grid point, got {n_lambdas}")
    if not 0.0 < ratio < 1.0:
        raise ConfigError(f"grid ratio must lie in (0, 1), got {ratio}")
    if n_lambdas == 1:
        return np.array([lambda_max])
    return lambda_max * np.logspace(0.0, np.log10(ratio), n_lambdas)


def lasso_path(
    y,
    x,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    max_sweeps: int = MAX_SWEEPS,
    tol: float = KKT_TOLERANCE,
) -> LassoPath:
    """Solutions on ``n_lambdas`` log-spaced points from lambda_max down to ``ratio * lambda_max``."""
    problem = _Standardised(y, x)
    lambdas = _grid(problem.lambda_max(), n_lambdas, ratio)

    coefficients = np.zeros((len(lambdas), problem.p))
    supports = []
    gaps = []
    b = None
    for step, lam in enumerate(lambdas):
        b, gap = problem.solve(float(lam), b, max_sweeps, tol)
        coefficients[step] = b / problem.scale
        supports.append(tuple(int(j) for j in np.flatnonzero(b)))
        gaps.append(gap)
    return LassoPath(
        lambdas=lambdas,
        coefficients=coefficients,
        supports=tuple(supports),
        kkt_gaps=tuple(gaps),
    )


@dataclass(frozen=True)
class UndertunedSupport:
    support: Tuple[int, ...]
    lam: float
    exhausted: bool

    def to_record(self) -> Dict[str, Any]:
        return {
            "method": "lasso",
            "kept": list(self.support),
            "lambda": self.lam,
            "grid_exhausted": self.exhausted,
        }


def lasso_undertuned_support(
    y,
    x,
    target_size: int,
    n_lambdas: int = 100,
    ratio: float = 1e-4,
    max_sweeps: int = MAX_SWEEPS,
) -> UndertunedSupport:
    """Walk the lambda grid downwards until the support has ``target_size`` members.

    If the grid runs out first, the support at its smallest lambda is returned
    with ``exhausted`` set.
    """
    if target_size < 1:
        raise ConfigError(f"target size must be at least 1, got {target_size}")
    problem = _Standardised(y, x)
    lambdas = _grid(problem.lambda_max(), n_lambdas, ratio)

    b = None
    support: Tuple[int, ...] = ()
    for lam in lambdas:
        b, _ = problem.solve(float(lam), b, max_sweeps, KKT_TOLERANCE)
        support = tuple(int(j) for j in np.flatnonzero(b))
        if len(support) >= target_size:
            return UndertunedSupport(support=support, lam=float(lam), exhausted=False)

    logger.warning(
        "LASSO grid exhausted with %d of %d requested variables", len(support), target_size
    )
    return UndertunedSupport(support=support, lam=float(lambdas[-1]), exhausted=True)
