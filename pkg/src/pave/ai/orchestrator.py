"""Backend selection.

This module provides the AIOrchestrator class that builds the completion
backend named by the configuration and the retry policy that wraps it.
"""

import logging
from typing import Optional

from .retry_helpers import RetryPolicy
from .service import AIService
from ..core.config import BackendConfiguration
from ..core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class AIOrchestrator:
    """Creates and caches the configured completion backend."""

    def __init__(self, config: BackendConfiguration):
        """Initialize orchestrator with configuration.

        Args:
            config: BackendConfiguration with backend settings
        """
        self.config = config
        self._service: Optional[AIService] = None

    def get_service(self) -> AIService:
        """Get the configured backend.

        Returns:
            AIService: Backend instance

        Raises:
            ConfigurationError: If the backend kind is unknown or misconfigured
        """
        if self._service is not None:
            return self._service

        if self.config.kind == "live":
            service = self._create_live_service()
        elif self.config.kind == "scripted":
            service = self._create_scripted_service()
        else:
            raise ConfigurationError(f"Unknown backend kind: {self.config.kind}")

        service.validate_config()
        logger.info(f"Using {self.config.kind} backend")
        self._service = service
        return service

    def retry_policy(self) -> RetryPolicy:
        """Retry policy described by the configuration."""
        return RetryPolicy(
            max_attempts=self.config.max_attempts,
            base_backoff_ms=self.config.base_backoff_ms,
            retry_on=self.config.retry_on,
        )

    def _create_live_service(self) -> AIService:
        """Create the OpenAI-compatible backend."""
        from .openai_adapter import OpenAIAdapter

        if not self.config.api_key:
            raise ConfigurationError("PAVE_API_KEY is not set")

        return OpenAIAdapter(
            api_key=self.config.api_key,
            model=self.config.model,
            base_url=self.config.base_url,
            timeout_seconds=self.config.timeout_seconds,
        )

    def _create_scripted_service(self) -> AIService:
        """Create the scripted backend from its script file."""
        from .scripted import ScriptedBackend

        if self.config.script is None:
            raise ConfigurationError("Scripted backend requires a script file")

        return ScriptedBackend.from_file(self.config.script)
