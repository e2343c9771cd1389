"""Retry logic for completion calls.

This module provides retry functionality with exponential backoff for handling
transient backend failures.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, FrozenSet, Optional, Tuple, Type

from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from .service import AIService, CompletionRequest, CompletionResponse
from ..core.exceptions import BackendTimeoutError, RateLimitExceededError, ServerError

logger = logging.getLogger(__name__)

ERROR_KINDS = {
    "timeout": BackendTimeoutError,
    "rate_limited": RateLimitExceededError,
    "server_error": ServerError,
}


@dataclass(frozen=True)
class RetryPolicy:
    """Which backend errors to retry, how often and how patiently."""

    max_attempts: int = 3
    base_backoff_ms: int = 500
    retry_on: FrozenSet[str] = frozenset(ERROR_KINDS)

    def __post_init__(self):
        """Validate retry policy."""
        object.__setattr__(self, "retry_on", frozenset(self.retry_on))

        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

        if self.base_backoff_ms < 1:
            raise ValueError("base_backoff_ms must be > 0")

        unknown = self.retry_on - set(ERROR_KINDS)
        if unknown:
            raise ValueError(f"retry_on contains unknown kinds: {sorted(unknown)}")

    @property
    def retryable(self) -> Tuple[Type[Exception], ...]:
        """Exception classes covered by retry_on."""
        return tuple(ERROR_KINDS[kind] for kind in sorted(self.retry_on))

    def backoff_ms(self, attempt: int) -> int:
        """Wait after the given failed attempt: base_backoff_ms * 2^(attempt - 1)."""
        return self.base_backoff_ms * 2 ** (attempt - 1)


def _log_retry(retry_state: RetryCallState) -> None:
    error = retry_state.outcome.exception() if retry_state.outcome else None
    wait = retry_state.next_action.sleep if retry_state.next_action else 0
    logger.warning(
        f"Completion attempt {retry_state.attempt_number} failed ({error}); "
        f"retrying in {wait:.2f}s"
    )


def complete_with_retry(
    service: AIService,
    request: CompletionRequest,
    policy: Optional[RetryPolicy] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> CompletionResponse:
    """Complete a request with automatic retry on transient failures.

    Args:
        service: AIService instance to use
        request: CompletionRequest with prompt and parameters
        policy: RetryPolicy (default: 3 attempts, 500 ms base backoff, all transient kinds)
        sleep: Sleep function, injectable for tests

    Returns:
        CompletionResponse: Model output

    Raises:
        AIServiceError: The last error once attempts are exhausted, or immediately
            for error classes outside policy.retry_on (e.g. AuthenticationError)
        ScriptExhaustedError: Never retried
    """
    policy = policy or RetryPolicy()
    retryer = Retrying(
        retry=retry_if_exception_type(policy.retryable),
        wait=wait_exponential(multiplier=policy.base_backoff_ms / 1000.0, exp_base=2),
        stop=stop_after_attempt(policy.max_attempts),
        sleep=sleep,
        before_sleep=_log_retry,
        reraise=True,
    )
    return retryer(service.complete, request)
