"""Confidence sets of models.

Every submodel of the comprehensive model up to ``s_max`` variables is tested
against it with a likelihood-ratio test; the accepted ones form the set.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .errors import (
    BudgetExceededError,
    ConfigError,
    DataError,
    DegenerateResidualError,
    RankDeficientError,
)
from .linalg_core import (
    as_matrix,
    as_vector,
    inverse_gram_form,
    least_squares,
    numerical_rank,
    orthonormal_basis,
    residualise,
)
from .regression_stats import SigmaMode, chisq_quantile, lrt_from_bases, reference_quantile

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class ConfidenceSetConfig:
    """Level, size cap and enumeration budget of a confidence set of models."""

    theta: float = 0.05
    s_max: int = 4
    budget: int = DEFAULT_BUDGET
    sigma_mode: SigmaMode = SigmaMode()
    level: float = 0.95
    threads: int = 1

    def validate(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if self.s_max < 0:
            raise ConfigError(f"s_max must be non-negative, got {self.s_max}")
        if self.budget < 1:
            raise ConfigError(f"budget must be positive, got {self.budget}")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"interval level must lie in (0, 1), got {self.level}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        self.sigma_mode.validate()

    def to_record(self) -> Dict[str, Any]:
        return {
            "theta": self.theta,
            "s_max": self.s_max,
            "budget": self.budget,
            "sigma_mode": self.sigma_mode.describe(),
            "level": self.level,
        }


@dataclass(frozen=True)
class ModelRecord:
    members: Tuple[int, ...]
    w: float
    df: int
    accepted: bool

    def to_record(self) -> Dict[str, Any]:
        return {
            "members": list(self.members),
            "w": self.w,
            "df": self.df,
            "accepted": self.accepted,
        }


@dataclass(frozen=True)
class ModelConfidenceSet:
    """Accepted submodels of ``comprehensive`` with the counts behind them."""

    comprehensive: Tuple[int, ...]
    theta: float
    s_max: int
    records: Tuple[ModelRecord, ...]
    tested: int
    sigma_mode: SigmaMode
    rejected: Tuple[ModelRecord, ...] = ()

    @property
    def accepted(self) -> int:
        return len(self.records)

    def contains(self, members: Sequence[int]) -> bool:
        key = tuple(sorted(int(i) for i in members))
        return any(record.members == key for record in self.records)

    def to_record(self) -> Dict[str, Any]:
        return {
            "comprehensive": list(self.comprehensive),
            "theta": self.theta,
            "s_max": self.s_max,
            "sigma_mode": self.sigma_mode.describe(),
            "tested": self.tested,
            "accepted": self.accepted,
            "models": [record.to_record() for record in self.records],
        }


def model_count(size: int, s_max: int) -> int:
    """Number of subsets of a ``size``-set with at most ``s_max`` members."""
    return sum(math.comb(size, j) for j in range(min(size, s_max) + 1))


def enumerate_submodels(comprehensive: Sequence[int], s_max: int) -> Iterator[Tuple[int, ...]]:
    """Subsets of the sorted comprehensive model, by size then lexicographically."""
    ordered = sorted(comprehensive)
    for size in range(min(len(ordered), s_max) + 1):
        yield from combinations(ordered, size)


def _test_model(
    y: np.ndarray,
    x: np.ndarray,
    comp_basis: np.ndarray,
    members: Tuple[int, ...],
    sigma: Optional[float],
    theta: float,
) -> ModelRecord:
    sub_basis = orthonormal_basis(x[:, list(members)]) if members else np.zeros((y.shape[0], 0))
    w, df = lrt_from_bases(y, comp_basis, sub_basis, sigma)
    if df <= 0:
        return ModelRecord(members, 0.0, 0, True)
    return ModelRecord(members, w, df, w <= chisq_quantile(df, 1.0 - theta))


def build_confidence_set(
    y,
    x,
    comprehensive: Sequence[int],
    theta: float = 0.05,
    s_max: int = 4,
    sigma: Optional[float] = None,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    keep_rejected: bool = False,
) -> ModelConfidenceSet:
    """Test every submodel of ``comprehensive`` with at most ``s_max`` members.

    ``y`` and ``x`` are the assessment observations, centred. With ``sigma=None``
    the profile likelihood ratio is used against the same chi-squared reference.
    Degrees of freedom come from numerical ranks, so a submodel spanning the same
    space as the comprehensive model is accepted with w = 0.

    Raises:
        BudgetExceededError: when more than ``budget`` models would be tested.
    """
    mode = SigmaMode(sigma)
    ConfidenceSetConfig(theta=theta, s_max=s_max, budget=budget, sigma_mode=mode, threads=threads).validate()
    y = as_vector(y)
    x = as_matrix(x)
    if x.shape[0] != y.shape[0]:
        raise DataError(f"Response has {y.shape[0]} observations but design has {x.shape[0]}")
    members = tuple(sorted(set(int(i) for i in comprehensive)))
    if any(not 0 <= i < x.shape[1] for i in members):
        raise ConfigError(f"Comprehensive model indexes columns outside 0..{x.shape[1] - 1}")

    count = model_count(len(members), s_max)
    if count > budget:
        raise BudgetExceededError(count, budget)

    logger.info("Testing %d submodels of a %d-variable comprehensive model", count, len(members))
    comp_basis = orthonormal_basis(x[:, list(members)]) if members else np.zeros((y.shape[0], 0))
    records: List[ModelRecord] = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_test_model)(y, x, comp_basis, model, sigma, theta)
        for model in enumerate_submodels(members, s_max)
    )

    accepted = tuple(r for r in records if r.accepted)
    rejected = tuple(r for r in records if not r.accepted) if keep_rejected else ()
    logger.info("Accepted %d of %d submodels at theta=%g", len(accepted), len(records), theta)
    return ModelConfidenceSet(
        comprehensive=members,
        theta=theta,
        s_max=s_max,
        records=accepted,
        tested=len(records),
        sigma_mode=mode,
        rejected=rejected,
    )


@dataclass(frozen=True)
class PredictionInterval:
    """Interval for one accepted model at one query point; ``reason`` set when omitted."""

    members: Tuple[int, ...]
    query: int
    centre: Optional[float]
    half_width: Optional[float]
    reason: str = ""

    @property
    def lower(self) -> Optional[float]:
        return None if self.centre is None else self.centre - self.half_width

    @property
    def upper(self) -> Optional[float]:
        return None if self.centre is None else self.centre + self.half_width

    def to_record(self) -> Dict[str, Any]:
        return {
            "members": list(self.members),
            "query": self.query,
            "centre": self.centre,
            "half_width": self.half_width,
            "reason": self.reason,
        }


def _model_interval(
    y: np.ndarray,
    x: np.ndarray,
    members: Tuple[int, ...],
    query: int,
    point: np.ndarray,
    level: float,
    sigma_mode: SigmaMode,
) -> PredictionInterval:
    n = y.shape[0]
    xm = x[:, list(members)]
    xq = point[list(members)]
    try:
        fit = least_squares(y, xm)
        if sigma_mode.is_known:
            scale = float(sigma_mode.sigma)
            q = reference_quantile(level)
        else:
            df = n - len(members)
            if df < 1:
                raise DegenerateResidualError(f"No residual degrees of freedom for {len(members)} columns")
            scale = fit.residual_norm / math.sqrt(df)
            q = reference_quantile(level, df)
        leverage = inverse_gram_form(xm, xq)
    except (RankDeficientError, DegenerateResidualError) as e:
        logger.warning("No interval for model %s: %s", list(members), e)
        return PredictionInterval(members, query, None, None, str(e))

    centre = float(xq @ fit.coefficients) if members else 0.0
    return PredictionInterval(members, query, centre, q * scale * math.sqrt(1.0 + leverage))


def prediction_intervals(
    mcs: ModelConfidenceSet,
    y,
    x,
    x_new,
    level: float = 0.95,
    sigma_mode: SigmaMode = SigmaMode(),
) -> Tuple[PredictionInterval, ...]:
    """Normal-theory prediction intervals of every accepted model.

    ``x_new`` holds one query point per row (or a single vector) with all p
    entries, centred like ``x``. Results are ordered by model, then query.
    """
    y = as_vector(y)
    x = as_matrix(x)
    points = as_matrix(np.atleast_2d(np.asarray(x_new, dtype=float)))
    if points.shape[1] != x.shape[1]:
        raise DataError(f"Query points have {points.shape[1]} entries, expected {x.shape[1]}")
    if not 0.0 < level < 1.0:
        raise ConfigError(f"level must lie in (0, 1), got {level}")

    return tuple(
        _model_interval(y, x, record.members, query, point, level, sigma_mode)
        for record in mcs.records
        for query, point in enumerate(points)
    )


@dataclass(frozen=True)
class IntervalAgreement:
    query: int
    models: int
    common_point: bool
    centre_spread: float

    def to_record(self) -> Dict[str, Any]:
        return {
            "query": self.query,
            "models": self.models,
            "common_point": self.common_point,
            "centre_spread": self.centre_spread,
        }


def interval_agreement(intervals: Sequence[PredictionInterval]) -> Tuple[IntervalAgreement, ...]:
    """Per query point: do all intervals share a point, and how far apart are the centres."""
    by_query: Dict[int, List[PredictionInterval]] = {}
    for interval in intervals:
        if interval.centre is not None:
            by_query.setdefault(interval.query, []).append(interval)

    result = []
    for query in sorted(by_query):
        group = by_query[query]
        centres = [i.centre for i in group]
        result.append(
            IntervalAgreement(
                query=query,
                models=len(group),
                common_point=max(i.lower for i in group) <= min(i.upper for i in group),
                centre_spread=float(max(centres) - min(centres)),
            )
        )
    return tuple(result)


def noncentrality(x_comp, x_sub, theta0, sigma: float) -> float:
    """sigma^{-2} |(I - P_sub) X_comp theta0|^2, the signal a submodel leaves out."""
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    x_comp = as_matrix(x_comp)
    theta0 = as_vector(theta0)
    if theta0.shape[0] != x_comp.shape[1]:
        raise ConfigError(f"theta0 has {theta0.shape[0]} entries for {x_comp.shape[1]} columns")
    rank = numerical_rank(x_comp)
    if rank < x_comp.shape[1]:
        raise RankDeficientError(rank, x_comp.shape[1])

    signal = x_comp @ theta0
    if np.size(x_sub) == 0:
        return float(signal @ signal) / sigma**2
    x_sub = as_matrix(x_sub)
    rank = numerical_rank(x_sub)
    if rank < x_sub.shape[1]:
        raise RankDeficientError(rank, x_sub.shape[1])
    omitted = residualise(signal, x_sub)
    return float(omitted @ omitted) / sigma**2
