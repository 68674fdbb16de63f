"""cox-reduce: Cox reduction over hypercube arrangements and confidence sets of models.

Stages compose into pipelines with ``pipeline().then(...)``.
"""

from .types import DescribeTransformer, IndexSet, Stage, StageTransformer
from .middleware import MiddlewareStage
from .builder import PipelineBuilder
from .reduction import ReductionConfig, cox_reduce, stability_report
from .confset import ConfidenceSetConfig, build_confidence_set, prediction_intervals
from .regression_stats import SigmaMode

__version__ = "0.1.0"


def pipeline():
    """Create a new pipeline starting point."""
    return PipelineBuilder()


__all__ = [
    "DescribeTransformer",
    "IndexSet",
    "Stage",
    "StageTransformer",
    "MiddlewareStage",
    "PipelineBuilder",
    "ReductionConfig",
    "ConfidenceSetConfig",
    "SigmaMode",
    "cox_reduce",
    "stability_report",
    "build_confidence_set",
    "prediction_intervals",
    "pipeline",
    "__version__",
]
