"""Wald statistics, likelihood-ratio statistics and reference distributions."""

import logging
import math
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from .errors import (
    ConfigError,
    DegenerateResidualError,
    NotNestedError,
    RankDeficientError,
)
from .linalg_core import (
    ZERO_NORM,
    as_matrix,
    as_vector,
    block_corr,
    least_squares,
    multiple_corr,
    numerical_rank,
    orthonormal_basis,
    residualise,
)

logger = logging.getLogger(__name__)

MIN_SIGMA_HAT = 1e-12


@dataclass(frozen=True)
class SigmaMode:
    """Error scale used by Wald statistics: a known sigma, or re-estimated per fit."""

    sigma: Optional[float] = None

    @classmethod
    def known(cls, sigma: float) -> "SigmaMode":
        mode = cls(sigma=float(sigma))
        mode.validate()
        return mode

    @classmethod
    def estimate(cls) -> "SigmaMode":
        return cls(sigma=None)

    @property
    def is_known(self) -> bool:
        return self.sigma is not None

    def validate(self) -> None:
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"Known sigma must be positive and finite, got {self.sigma}")

    def describe(self) -> str:
        return f"known({self.sigma:g})" if self.is_known else "estimate"


@dataclass(frozen=True)
class WaldVector:
    """Per-variable Wald statistics of one regression."""

    values: np.ndarray
    sigma_mode: SigmaMode
    index_map: Tuple[int, ...]
    scale: float
    residual_df: int

    def entry(self, index: int) -> float:
        return float(self.values[self.index_map.index(index)])

    def pvalues(self) -> np.ndarray:
        """Two-sided p-values: normal reference for known sigma, Student-t otherwise."""
        if self.sigma_mode.is_known:
            return np.array([normal_tail_pvalue(t) for t in self.values])
        return np.array([student_tail_pvalue(t, self.residual_df) for t in self.values])


def wald(
    y,
    xk,
    sigma_mode: SigmaMode,
    index_map: Optional[Sequence[int]] = None,
) -> WaldVector:
    """Wald statistics sigma^{-1} D_K^{-1/2} theta_{Y:K} for the columns of ``xk``.

    With ``SigmaMode.estimate()`` sigma is replaced by the residual scale
    |Y - X_K theta| / sqrt(n - |K|) of this very regression.
    """
    y = as_vector(y)
    xk = as_matrix(xk)
    n, k = xk.shape
    index_map = tuple(range(k)) if index_map is None else tuple(int(i) for i in index_map)
    if len(index_map) != k:
        raise ConfigError(f"index_map has {len(index_map)} entries for {k} columns")
    if len(set(index_map)) != k:
        raise ConfigError("index_map contains duplicate indices")

    fit = least_squares(y, xk)
    residual_df = n - k
    if sigma_mode.is_known:
        scale = float(sigma_mode.sigma)
    else:
        if residual_df < 1:
            raise DegenerateResidualError(
                f"Cannot estimate sigma with {n} observations and {k} columns"
            )
        scale = fit.residual_norm / math.sqrt(residual_df)
        if scale < MIN_SIGMA_HAT:
            raise DegenerateResidualError(f"Estimated sigma {scale:.3e} is degenerate")

    values = fit.coefficients / (scale * np.sqrt(fit.xtx_inv_diag))
    return WaldVector(
        values=values,
        sigma_mode=sigma_mode,
        index_map=index_map,
        scale=scale,
        residual_df=residual_df,
    )


def wald_signal_noise_split(y, xa, theta0, a: int) -> Tuple[float, float]:
    """Split sigma times the Wald entry of column ``a`` into signal and noise parts.

    delta1 is the recovered true signal sqrt(1 - R^2(x_a, X_{A-a})) theta0_a |x_a|;
    delta2 is the part of the omitted signal Y - X_A theta0_A picked up by the
    residualised x_a. ``theta0`` holds the true coefficients of the columns of ``xa``.
    """
    y = as_vector(y)
    xa = as_matrix(xa)
    theta0 = as_vector(theta0)
    k = xa.shape[1]
    if theta0.shape[0] != k:
        raise ConfigError(f"theta0 has {theta0.shape[0]} entries for {k} columns")
    if not 0 <= a < k:
        raise ConfigError(f"Column position {a} outside 0..{k - 1}")
    rank = numerical_rank(xa)
    if rank < k:
        raise RankDeficientError(rank, k)

    x_a = xa[:, a]
    companions = np.delete(xa, a, axis=1)
    r2 = multiple_corr(x_a, companions) ** 2 if companions.shape[1] else 0.0
    delta1 = math.sqrt(max(0.0, 1.0 - r2)) * theta0[a] * float(np.linalg.norm(x_a))

    omitted = y - xa @ theta0
    direction = residualise(x_a, companions)
    # |u| R(u, v) without dividing by |u|, so a zero residual gives exactly 0
    delta2 = float(omitted @ direction / np.linalg.norm(direction))
    return float(delta1), delta2


@dataclass(frozen=True)
class ApproximationCheck:
    """Quantities entering the bound on |T_{Y:A.B} - T_{Y:A}|_inf."""

    delta: float
    block_correlation: float
    response_correlation: float
    scaled_response_norm: float

    def bound(self, constant: float) -> float:
        return constant * self.scaled_response_norm * (
            self.block_correlation + self.response_correlation
        )


def partial_wald_deltas(y, xa, xb, sigma: float) -> ApproximationCheck:
    """Compare the A-entries of the joint Wald vector with the A-only fit."""
    y = as_vector(y)
    xa = as_matrix(xa)
    xb = as_matrix(xb)
    mode = SigmaMode.known(sigma)
    joint = wald(y, np.hstack([xa, xb]), mode).values[: xa.shape[1]]
    alone = wald(y, xa, mode).values
    return ApproximationCheck(
        delta=float(np.max(np.abs(joint - alone))),
        block_correlation=block_corr(xa, xb),
        response_correlation=multiple_corr(y, xb),
        scaled_response_norm=float(np.linalg.norm(y)) / sigma,
    )


def _contains_columns(x_comp: np.ndarray, x_sub: np.ndarray) -> bool:
    for j in range(x_sub.shape[1]):
        column = x_sub[:, j][:, None]
        if not np.any(np.all(x_comp == column, axis=0)):
            return False
    return True


def lrt_from_bases(
    y: np.ndarray, comp_basis: np.ndarray, sub_basis: np.ndarray, sigma: Optional[float]
) -> Tuple[float, int]:
    """Likelihood-ratio statistic from orthonormal bases of two nested spans.

    Known sigma gives sigma^{-2} |(P_comp - P_sub) y|^2; ``sigma=None`` gives the
    profile statistic n log(RSS_sub / RSS_comp).
    """
    df = comp_basis.shape[1] - sub_basis.shape[1]
    fitted_comp = comp_basis @ (comp_basis.T @ y)
    fitted_sub = sub_basis @ (sub_basis.T @ y)

    if sigma is not None:
        w = float(np.sum((fitted_comp - fitted_sub) ** 2)) / sigma**2
    else:
        rss_comp = float(np.sum((y - fitted_comp) ** 2))
        rss_sub = float(np.sum((y - fitted_sub) ** 2))
        if rss_comp < ZERO_NORM:
            raise DegenerateResidualError("Comprehensive model fits the data exactly")
        w = y.shape[0] * math.log(rss_sub / rss_comp)
    return max(w, 0.0), df


def lrt_statistic(y, x_comp, x_sub, sigma: Optional[float]) -> Tuple[float, int]:
    """Likelihood-ratio statistic w and degrees of freedom rank(comp) - rank(sub).

    Raises:
        NotNestedError: when a column of ``x_sub`` is not a column of ``x_comp``.
    """
    y = as_vector(y)
    x_comp = as_matrix(x_comp)
    x_sub = as_matrix(x_sub) if np.size(x_sub) else np.zeros((y.shape[0], 0))
    if sigma is not None and not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    if not _contains_columns(x_comp, x_sub):
        raise NotNestedError("Submodel columns are not all among the comprehensive columns")
    return lrt_from_bases(y, orthonormal_basis(x_comp), orthonormal_basis(x_sub), sigma)


def chisq_cdf(x: float, df: int) -> float:
    if x <= 0:
        return 0.0
    return float(special.gammainc(df / 2.0, x / 2.0))


def _check_quantile_domain(df: int, prob: float) -> None:
    if isinstance(df, bool) or int(df) != df or df < 1:
        raise ConfigError(f"Degrees of freedom must be a positive integer, got {df}")
    if not 0.0 < prob < 1.0:
        raise ConfigError(f"Probability must lie strictly between 0 and 1, got {prob}")


class ChiSqQuantileTable:
    """Thread-safe cache of chi-squared quantiles keyed by (df, prob)."""

    def __init__(self):
        self._cache: Dict[Tuple[int, float], float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cache)

    def quantile(self, df: int, prob: float) -> float:
        _check_quantile_domain(df, prob)
        key = (int(df), float(prob))
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached

        value = 2.0 * float(special.gammaincinv(key[0] / 2.0, key[1]))
        with self._lock:
            self._cache[key] = value
        return value


_QUANTILES = ChiSqQuantileTable()


def chisq_quantile(df: int, prob: float) -> float:
    """The ``prob`` quantile of the chi-squared law with ``df`` degrees of freedom."""
    return _QUANTILES.quantile(df, prob)


def normal_tail_pvalue(t: float) -> float:
    """Two-sided standard-normal p-value 2(1 - Phi(|t|))."""
    if math.isnan(t):
        raise ValueError("p-value of NaN statistic")
    return float(special.erfc(abs(t) / math.sqrt(2.0)))


def student_tail_pvalue(t: float, df: int) -> float:
    if math.isnan(t):
        raise ValueError("p-value of NaN statistic")
    return float(2.0 * stats.t.sf(abs(t), df))


def reference_quantile(level: float, df: Optional[int] = None) -> float:
    """Two-sided critical value: normal when ``df`` is None, Student-t otherwise."""
    if not 0.0 < level < 1.0:
        raise ConfigError(f"Level must lie strictly between 0 and 1, got {level}")
    upper = 0.5 + level / 2.0
    if df is None:
        return float(special.ndtri(upper))
    return float(stats.t.ppf(upper, df))
