"""OpenAI-compatible chat-completions backend.

This module provides the OpenAIAdapter class that implements the AIService
interface for any endpoint speaking the chat-completions protocol.
"""

import logging
import time
from typing import Any, Dict, Optional

import openai
from openai import OpenAI

from .service import AIService, CompletionRequest, CompletionResponse
from ..core.exceptions import (
    AIServiceError,
    AuthenticationError,
    BackendTimeoutError,
    ConfigurationError,
    RateLimitExceededError,
    ServerError,
)

logger = logging.getLogger(__name__)


class OpenAIAdapter(AIService):
    """Adapter for OpenAI-compatible chat-completions endpoints."""

    def __init__(
        self,
        api_key: str,
        model: str,
        base_url: Optional[str] = None,
        timeout_seconds: float = 60.0,
    ):
        """Initialize the adapter.

        Args:
            api_key: Bearer credential (read from PAVE_API_KEY by the CLI)
            model: Model name sent with every request
            base_url: API base URL; requests go to {base_url}/chat/completions
            timeout_seconds: Per-request timeout

        Raises:
            ValueError: If API key is None or empty
        """
        super().__init__()
        if not api_key:
            raise ValueError("API key is required for the live backend")

        self.api_key = api_key
        self.model = model
        self.base_url = base_url
        self.timeout_seconds = timeout_seconds
        self._client = None

    def _get_client(self):
        """Get or create the OpenAI client.

        Returns:
            OpenAI client instance
        """
        if self._client is None:
            # Retries are owned by retry_helpers, not the SDK.
            self._client = OpenAI(
                api_key=self.api_key,
                base_url=self.base_url,
                timeout=self.timeout_seconds,
                max_retries=0,
            )
        return self._client

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        """Run one chat completion.

        Args:
            request: CompletionRequest with prompt and parameters

        Returns:
            CompletionResponse with the first choice's message content

        Raises:
            BackendTimeoutError: If the request timed out
            RateLimitExceededError: If rate limit is exceeded
            AuthenticationError: If the credential is rejected
            ServerError: For 5xx responses and connection failures
            AIServiceError: For other API errors
        """
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})

        kwargs: Dict[str, Any] = {
            "model": self.model,
            "messages": messages,
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }
        if request.seed is not None:
            kwargs["seed"] = request.seed

        started = time.perf_counter()
        try:
            response = self._get_client().chat.completions.create(**kwargs)
        except Exception as e:
            raise self._map_error(e) from e
        latency_ms = int((time.perf_counter() - started) * 1000)

        content = response.choices[0].message.content or ""
        usage = getattr(response, "usage", None)
        input_tokens = getattr(usage, "prompt_tokens", None) if usage else None
        output_tokens = getattr(usage, "completion_tokens", None) if usage else None

        logger.debug(f"Completion from {self.model} in {latency_ms} ms ({len(content)} chars)")

        return CompletionResponse(
            text=content,
            input_token_count=input_tokens if isinstance(input_tokens, int) else 0,
            output_token_count=output_tokens if isinstance(output_tokens, int) else 0,
            latency_ms=latency_ms,
        )

    @staticmethod
    def _map_error(error: Exception) -> AIServiceError:
        """Translate SDK and transport errors into backend errors."""
        if isinstance(error, openai.APITimeoutError):
            return BackendTimeoutError(f"Completion request timed out: {error}")
        if isinstance(error, openai.RateLimitError):
            return RateLimitExceededError(f"Rate limit exceeded: {error}")
        if isinstance(error, (openai.AuthenticationError, openai.PermissionDeniedError)):
            return AuthenticationError(f"Authentication failed: {error}")
        if isinstance(error, (openai.InternalServerError, openai.APIConnectionError)):
            return ServerError(f"Completion service unavailable: {error}")
        if isinstance(error, openai.APIStatusError) and error.status_code >= 500:
            return ServerError(f"Completion service error: {error}")

        # Non-SDK errors (proxies, custom transports): fall back to the message.
        error_msg = str(error).lower()
        if "timed out" in error_msg or "timeout" in error_msg:
            return BackendTimeoutError(f"Completion request timed out: {error}")
        if "rate" in error_msg and "limit" in error_msg:
            return RateLimitExceededError(f"Rate limit exceeded: {error}")
        if "api key" in error_msg or "401" in error_msg or "403" in error_msg:
            return AuthenticationError(f"Authentication failed: {error}")
        if "unavailable" in error_msg or "503" in error_msg or "502" in error_msg:
            return ServerError(f"Completion service unavailable: {error}")
        return AIServiceError(f"Completion API error: {error}")

    def validate_config(self) -> bool:
        """Validate adapter configuration.

        Returns:
            bool: True if configuration is valid

        Raises:
            ConfigurationError: If configuration is invalid
        """
        if not self.api_key:
            raise ConfigurationError("API key is required for the live backend")

        if not self.model:
            raise ConfigurationError("Model name is required for the live backend")

        if self.base_url and not self.base_url.startswith(("http://", "https://")):
            raise ConfigurationError(f"base_url must be an http(s) URL: {self.base_url}")

        return True
