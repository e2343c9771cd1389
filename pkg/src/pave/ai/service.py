"""Completion backend interface and data contracts.

This module defines the abstract interface that every completion backend must
implement, along with the request and response data structures.
"""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class CompletionRequest:
    """Request data for one stage call."""

    system_text: str
    user_text: str
    temperature: float = 0.0
    max_output_tokens: int = 512
    seed: Optional[int] = None

    def __post_init__(self):
        """Validate completion request parameters."""
        if not self.user_text:
            raise ValueError("user_text must not be empty")

        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be > 0")

        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResponse:
    """Model output for one stage call."""

    text: str
    input_token_count: int = 0
    output_token_count: int = 0
    latency_ms: int = 0

    def __post_init__(self):
        """Validate completion response."""
        if self.input_token_count < 0 or self.output_token_count < 0:
            raise ValueError("token counts must be >= 0")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")


class AIService(ABC):
    """Abstract interface for completion backends.

    Subclasses implement ``_complete``; ``complete`` counts every call so a run
    can compare its own stage accounting against what the backend actually saw.
    Implementations must tolerate concurrent calls.
    """

    def __init__(self):
        self._call_count = 0
        self._count_lock = threading.Lock()

    @property
    def call_count(self) -> int:
        """Number of ``complete`` invocations so far."""
        with self._count_lock:
            return self._call_count

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        """Send one request to the backend.

        Args:
            request: CompletionRequest with prompt and decoding parameters

        Returns:
            CompletionResponse: Model text and usage metadata

        Raises:
            BackendTimeoutError: Request timed out
            RateLimitExceededError: Rate limit exceeded (429)
            ServerError: Server-side failure or unreachable endpoint
            AuthenticationError: Credential rejected
            ScriptExhaustedError: Scripted backend has nothing queued
        """
        with self._count_lock:
            self._call_count += 1
        return self._complete(request)

    @abstractmethod
    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        """Backend-specific completion."""
        pass

    @abstractmethod
    def validate_config(self) -> bool:
        """Validate backend configuration (credentials, endpoints, scripts).

        Returns:
            bool: True if configuration is valid

        Raises:
            ConfigurationError: Invalid configuration detected
        """
        pass
