"""Middleware stage implementation for cox-reduce pipelines."""

import logging
import time
from typing import Any, Dict, Optional

from .types import DescribeTransformer, Stage, StageTransformer

logger = logging.getLogger(__name__)

TIMINGS_KEY = "timings"


def stage_name(transformer: Optional[StageTransformer]) -> str:
    """Name of a run transformer: its ``stage_name`` attribute, else its function name."""
    if transformer is None:
        return "passthrough"
    return getattr(transformer, "stage_name", None) or getattr(transformer, "__name__", "stage")


class MiddlewareStage:
    """A stage that wraps a transformer around a downstream stage.

    Each run is timed. When the incoming context holds a ``timings`` dict,
    the wall time of the stage, downstream stages included, is stored in it
    under the stage name. The report record is never touched.
    """

    def __init__(
        self,
        downstream: Stage,
        describe_transformer: Optional[DescribeTransformer] = None,
        run_transformer: Optional[StageTransformer] = None,
        name: Optional[str] = None,
    ):
        self._downstream = downstream
        self.name = name or stage_name(run_transformer)
        self._describe_transformer = describe_transformer or (
            lambda next_stage, description: next_stage.describe()
        )
        self._run_transformer = run_transformer or (
            lambda next_stage, context: next_stage.run(context)
        )

    def describe(self) -> Dict[str, Any]:
        if self._downstream is None:
            raise ValueError("No downstream stage configured")
        return self._describe_transformer(self._downstream, {})

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        if self._downstream is None:
            raise ValueError("No downstream stage configured")
        logger.debug("Entering stage %s", self.name)
        started = time.perf_counter()
        try:
            result = self._run_transformer(self._downstream, context)
        except Exception:
            logger.debug("Stage %s failed after %.3fs", self.name, time.perf_counter() - started)
            raise
        elapsed = time.perf_counter() - started
        logger.debug("Stage %s finished in %.3fs", self.name, elapsed)
        timings = context.get(TIMINGS_KEY)
        if isinstance(timings, dict):
            timings[self.name] = elapsed
        return result

    def then(self, *args):
        """Chain another transformer or terminal stage at the end of the pipeline."""
        if not hasattr(self._downstream, "then"):
            raise ValueError("Cannot chain on downstream stage: it has no `then` method")

        return MiddlewareStage(
            downstream=self._downstream.then(*args),
            describe_transformer=self._describe_transformer,
            run_transformer=self._run_transformer,
            name=self.name,
        )
