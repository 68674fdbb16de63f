"""Pipeline stages: reduction, confidence set, intervals and comparators.

Each factory returns a ``(describe_transformer, run_transformer)`` pair for
``pipeline().then(*stage)``. Stages read and extend a shared context dict;
the ``record`` entry accumulates the report.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .comparators import lasso_undertuned_support, marginal_screen
from .confset import (
    ConfidenceSetConfig,
    build_confidence_set,
    interval_agreement,
    prediction_intervals,
)
from .errors import ConfigError
from .ingest import DataSet
from .linalg_core import as_matrix, centre, centre_vector
from .reduction import ReductionConfig, cox_reduce, stability_report
from .types import DescribeTransformer, Stage, StageTransformer

logger = logging.getLogger(__name__)

StagePair = Tuple[DescribeTransformer, StageTransformer]


@dataclass(frozen=True)
class AssessmentPart:
    """Observations used for model assessment, re-centred."""

    rows: np.ndarray
    y: np.ndarray
    x: np.ndarray
    y_mean: float
    x_means: np.ndarray


def assessment_part(data: DataSet, rows: Optional[np.ndarray] = None) -> AssessmentPart:
    rows = np.arange(data.n) if rows is None else np.asarray(rows)
    y, y_mean = centre_vector(data.raw_y[rows])
    view = centre(data.raw_x[rows])
    return AssessmentPart(rows=rows, y=y, x=view.values, y_mean=y_mean, x_means=view.means)


def _named(name: str) -> DescribeTransformer:
    def describe(next_stage: Stage, description: Dict[str, Any]) -> Dict[str, Any]:
        downstream = next_stage.describe()
        return {**downstream, "stages": [name] + list(downstream.get("stages", []))}

    return describe


def _pair(name: str, run: StageTransformer) -> StagePair:
    run.stage_name = name  # type: ignore[attr-defined]
    return _named(name), run


def _record(context: Dict[str, Any]) -> Dict[str, Any]:
    return context.setdefault("record", {})


def _model_name(data: DataSet, members: Sequence[int]) -> str:
    return "+".join(data.names_of(members)) if members else "(empty)"


class Collect:
    """Terminal stage: hands the finished context back."""

    def describe(self) -> Dict[str, Any]:
        return {"stages": []}

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        return context


def reduce_stage(config: ReductionConfig) -> StagePair:
    def run(next_stage: Stage, context: Dict[str, Any]) -> Dict[str, Any]:
        data: DataSet = context["data"]
        outcome = cox_reduce(data.y, data.x, config, exclude=data.constant)
        stability = stability_report(outcome)
        trace = outcome.to_record()
        _record(context)["reduction"] = {
            "config": config.to_record(),
            "rules": config.rule_names(),
            "comprehensive": data.names_of(outcome.comprehensive),
            "comprehensive_indices": trace.pop("comprehensive"),
            "forced": data.names_of(config.forced),
            "stability": stability.to_record(),
            **trace,
        }
        context.update(
            reduction=outcome,
            stability=stability,
            assessment=assessment_part(data, outcome.assessment_rows),
        )
        return next_stage.run(context)

    return _pair("reduce", run)


def confidence_set_stage(
    config: ConfidenceSetConfig, comprehensive: Optional[Sequence[int]] = None
) -> StagePair:
    """Models are tested on the assessment part left by the reduction, or on all rows."""

    def run(next_stage: Stage, context: Dict[str, Any]) -> Dict[str, Any]:
        data: DataSet = context["data"]
        if comprehensive is not None:
            members = tuple(comprehensive)
        elif "reduction" in context:
            members = context["reduction"].comprehensive
        else:
            raise ConfigError("No comprehensive model: run a reduction first or name one")
        part = context.setdefault("assessment", assessment_part(data))

        mcs = build_confidence_set(
            part.y,
            part.x,
            members,
            theta=config.theta,
            s_max=config.s_max,
            sigma=config.sigma_mode.sigma,
            budget=config.budget,
            threads=config.threads,
        )
        record = mcs.to_record()
        for model in record["models"]:
            model["model"] = _model_name(data, model["members"])
        _record(context)["confidence_set"] = {
            "config": config.to_record(),
            "observations": len(part.rows),
            "comprehensive_names": data.names_of(mcs.comprehensive),
            **record,
        }
        context["confset"] = mcs
        return next_stage.run(context)

    return _pair("confset", run)


def interval_stage(points, level: float, sigma_mode) -> StagePair:
    """Prediction intervals at ``points`` (raw covariate scale, one row per point)."""
    raw_points = as_matrix(points)

    def run(next_stage: Stage, context: Dict[str, Any]) -> Dict[str, Any]:
        data: DataSet = context["data"]
        part: AssessmentPart = context["assessment"]
        intervals = prediction_intervals(
            context["confset"], part.y, part.x, raw_points - part.x_means, level, sigma_mode
        )
        rows = []
        for interval in intervals:
            shift = part.y_mean
            rows.append(
                {
                    "model": _model_name(data, interval.members),
                    "query": interval.query,
                    "prediction": None if interval.centre is None else interval.centre + shift,
                    "lower": None if interval.lower is None else interval.lower + shift,
                    "upper": None if interval.upper is None else interval.upper + shift,
                    "note": interval.reason,
                }
            )
        agreement = interval_agreement(intervals)
        _record(context)["intervals"] = {
            "level": level,
            "table": rows,
            "agreement": [a.to_record() for a in agreement],
        }
        context.update(intervals=intervals, agreement=agreement)
        return next_stage.run(context)

    return _pair("intervals", run)


def screen_stage(s_hat: int) -> StagePair:
    def run(next_stage: Stage, context: Dict[str, Any]) -> Dict[str, Any]:
        data: DataSet = context["data"]
        result = marginal_screen(data.y, data.x, s_hat)
        record = result.to_record()
        record["s_hat"] = s_hat
        record["kept_names"] = data.names_of(result.kept)
        _record(context)["comparator"] = record
        context["comparator"] = result
        return next_stage.run(context)

    return _pair("screen", run)


def lasso_stage(target_size: int) -> StagePair:
    def run(next_stage: Stage, context: Dict[str, Any]) -> Dict[str, Any]:
        data: DataSet = context["data"]
        result = lasso_undertuned_support(data.y, data.x, target_size)
        record = result.to_record()
        record["s_hat"] = target_size
        record["kept_names"] = data.names_of(result.support)
        _record(context)["comparator"] = record
        context["comparator"] = result
        return next_stage.run(context)

    return _pair("lasso", run)
