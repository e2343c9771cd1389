"""
Data models for pipeline run results.

This module defines the per-example outcome and the per-run summary entities
produced by the validation pipeline.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..core.models import AuditTrace, FinalAnswer


@dataclass
class RunOutcome:
    """Result of running one example through a pipeline variant."""

    final: FinalAnswer
    trace: AuditTrace
    stage_errors: List[Tuple[str, str]] = field(default_factory=list)  # (stage, error class)
    retry_calls: int = 0  # Format-drift retries, not counted in backend_calls

    @property
    def clean(self) -> bool:
        """Whether every stage succeeded first try at the parsing level."""
        return not self.stage_errors


@dataclass
class ExampleFailure:
    """An example that could not be completed."""

    id: str
    stage: str
    error: str  # Exception class name
    message: str

    def to_dict(self) -> Dict[str, str]:
        return {"id": self.id, "stage": self.stage, "error": self.error, "message": self.message}


@dataclass
class RunSummary:
    """Counts for one dataset run, printed as JSON by ``pave run``."""

    variant: str
    completed: int = 0
    failed: int = 0
    revised: int = 0
    total_backend_calls: int = 0  # Stage calls of completed examples
    retry_calls: int = 0
    backend_call_count: Optional[int] = None  # What the backend itself counted
    failures: List[ExampleFailure] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    prompt_version: Optional[str] = None
    outcomes: Dict[str, RunOutcome] = field(default_factory=dict, repr=False)  # By example id

    @property
    def total(self) -> int:
        """Examples attempted."""
        return self.completed + self.failed

    def to_dict(self) -> Dict[str, Any]:
        """Serializable view of the summary."""
        data: Dict[str, Any] = {
            "variant": self.variant,
            "completed": self.completed,
            "failed": self.failed,
            "revised": self.revised,
            "total_backend_calls": self.total_backend_calls,
            "retry_calls": self.retry_calls,
            "backend_call_count": self.backend_call_count,
            "failures": [failure.to_dict() for failure in self.failures],
        }
        if self.prompt_version is not None:
            data["prompt_version"] = self.prompt_version
        if self.config:
            data["config"] = self.config
        return data


def validate_run_summary(summary: RunSummary) -> list[str]:
    """
    Validate run summary for consistency.

    Args:
        summary: RunSummary to validate

    Returns:
        List of validation error messages (empty if valid)
    """
    errors = []

    if summary.completed < 0 or summary.failed < 0:
        errors.append("completed and failed must be non-negative")

    if summary.revised > summary.completed:
        errors.append("revised cannot exceed completed")

    if summary.failed != len(summary.failures):
        errors.append("failed must equal the number of recorded failures")

    if summary.completed and summary.total_backend_calls < summary.completed:
        errors.append("every completed example makes at least one backend call")

    # Failed examples still spend calls, so the backend may have seen more.
    if summary.backend_call_count is not None:
        accounted = summary.total_backend_calls + summary.retry_calls
        if summary.failed == 0 and summary.backend_call_count != accounted:
            errors.append(
                f"backend counted {summary.backend_call_count} call(s), "
                f"pipeline accounted for {accounted}"
            )
        elif summary.backend_call_count < accounted:
            errors.append("backend_call_count is lower than the calls the pipeline accounted for")

    return errors
