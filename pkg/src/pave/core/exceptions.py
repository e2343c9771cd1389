"""Custom exceptions for pave.

This module defines the exception hierarchy used throughout the package
for consistent error handling and reporting.
"""

from typing import Iterable, Optional


class PaveError(Exception):
    """Base exception for all pave errors."""

    pass


class ConfigurationError(PaveError):
    """Invalid configuration or setup."""

    pass


class ValidationError(PaveError):
    """Data validation failed."""

    pass


class SchemaError(ValidationError):
    """A JSONL line does not match the expected record schema."""

    def __init__(self, line: int, field: str, detail: Optional[str] = None):
        self.line = line
        self.field = field
        self.detail = detail
        message = f"line {line}: invalid or missing field '{field}'"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class DatasetIOError(ValidationError):
    """A dataset or log file could not be read."""

    pass


# ============================================================================
# Backend errors
# ============================================================================


class AIServiceError(PaveError):
    """Completion backend communication failed."""

    pass


class BackendTimeoutError(AIServiceError):
    """The completion request timed out."""

    pass


class RateLimitExceededError(AIServiceError):
    """Completion backend rate limit exceeded."""

    pass


class ServerError(AIServiceError):
    """Completion backend returned a server-side failure or was unreachable."""

    pass


class AuthenticationError(AIServiceError):
    """Credential rejected by the completion backend."""

    pass


class ScriptExhaustedError(PaveError):
    """Scripted backend has no queued response left for a request."""

    pass


# ============================================================================
# Prompting errors
# ============================================================================


class PromptError(PaveError):
    """Prompt template error."""

    pass


class ParseError(PaveError):
    """Model output could not be parsed into a stage result."""

    pass


class EmptyFactListError(ParseError):
    """Decomposition output contained no parsable fact line."""

    pass


class EmptyDraftError(ParseError):
    """Draft or revision output was blank."""

    pass


# ============================================================================
# Pipeline errors
# ============================================================================


class PipelineError(PaveError):
    """A single example could not be completed."""

    def __init__(self, message: str, stage: str, example_id: Optional[str] = None):
        self.stage = stage
        self.example_id = example_id
        super().__init__(message)


class DecompositionFailedError(PipelineError):
    """Decomposition produced no facts, even after the format retry."""

    pass


class DraftFailedError(PipelineError):
    """Draft or revision produced no answer, even after the format retry."""

    pass


class BackendExhaustedError(PipelineError):
    """Backend kept failing after the retry policy gave up."""

    pass


class TraceSinkError(PaveError):
    """Writing a trace or prediction record failed."""

    pass


# ============================================================================
# Evaluation errors
# ============================================================================


class EvaluationError(PaveError):
    """Metric computation failed."""

    pass


class EmptyInputError(EvaluationError):
    """A metric was asked to summarize zero examples."""

    pass


class UndefinedAtPerfectBaselineError(EvaluationError):
    """Relative error reduction is undefined when the baseline makes no errors."""

    pass


class IdMismatchError(EvaluationError):
    """Two prediction logs do not cover the same example ids."""

    def __init__(self, ids: Iterable[str]):
        self.ids = sorted(ids)
        preview = ", ".join(self.ids[:10])
        if len(self.ids) > 10:
            preview += f", ... ({len(self.ids)} total)"
        super().__init__(f"prediction logs cover different ids: {preview}")
