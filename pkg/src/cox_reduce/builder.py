"""Pipeline builder: the open end of a cox-reduce pipeline."""

import logging
from typing import Any, Dict

logger = logging.getLogger(__name__)


def _is_stage(candidate: Any) -> bool:
    return hasattr(candidate, "describe") and hasattr(candidate, "run")


class PipelineBuilder:
    """Placeholder at the end of a pipeline until a terminal stage is chained."""

    def describe(self) -> Dict[str, Any]:
        raise ValueError("No downstream stage configured")

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        raise ValueError("No downstream stage configured")

    def then(self, *args):
        """Append a terminal stage, a run transformer, or a (describe, run) pair."""
        from .middleware import MiddlewareStage, stage_name

        if len(args) == 1:
            arg = args[0]
            if _is_stage(arg):
                # terminal stage replaces the builder
                logger.debug("Closing pipeline with %s", type(arg).__name__)
                return arg
            if not callable(arg):
                raise TypeError(f"Expected a stage or a run transformer, got {type(arg).__name__}")
            logger.debug("Appending stage %s", stage_name(arg))
            return MiddlewareStage(downstream=self, run_transformer=arg)

        if len(args) == 2:
            describe_transformer, run_transformer = args
            if not (callable(describe_transformer) and callable(run_transformer)):
                raise TypeError("A stage pair needs a describe and a run transformer")
            logger.debug("Appending stage %s", stage_name(run_transformer))
            return MiddlewareStage(
                downstream=self,
                describe_transformer=describe_transformer,
                run_transformer=run_transformer,
            )

        raise ValueError("Unsupported arguments to then()")
