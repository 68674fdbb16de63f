"""Type definitions and protocols for cox-reduce pipelines."""

from typing import Any, Callable, Dict, FrozenSet, Protocol


class Stage(Protocol):
    """Protocol for a pipeline stage operating on a context dict."""

    def describe(self) -> Dict[str, Any]:
        """Returns the stage names of this stage and everything downstream."""
        ...

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """Runs the stage and returns the resulting context."""
        ...


# Transformers receive the next stage and the context, and decide when to call it
DescribeTransformer = Callable[[Stage, Dict[str, Any]], Dict[str, Any]]
StageTransformer = Callable[[Stage, Dict[str, Any]], Dict[str, Any]]

IndexSet = FrozenSet[int]
