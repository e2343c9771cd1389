"""Unit tests for the OpenAI-compatible adapter and backend selection.

The OpenAI client is patched; no HTTP request is made.
"""

from pathlib import Path
import pytest

from pave.ai.openai_adapter import OpenAIAdapter
from pave.ai.orchestrator import AIOrchestrator
from pave.ai.scripted import ScriptedBackend
from pave.ai.service import AIService, CompletionRequest, CompletionResponse
from pave.core.config import BackendConfiguration
from pave.core.exceptions import (
    AIServiceError,
    AuthenticationError,
    BackendTimeoutError,
    ConfigurationError,
    RateLimitExceededError,
    ServerError,
)

REQUEST = CompletionRequest(system_text="[stage:draft]\nBe brief.", user_text="Question?", seed=7)


def mock_client_returning(mocker, content, usage=None):
    mock_client = mocker.Mock()
    mock_response = mocker.Mock()
    mock_response.choices = [mocker.Mock()]
    mock_response.choices[0].message.content = content
    mock_response.usage = usage
    mock_client.chat.completions.create.return_value = mock_response
    return mock_client


class TestOpenAIAdapter:
    """Tests for OpenAIAdapter."""

    def test_implements_ai_service(self):
        """Test that OpenAIAdapter implements AIService interface."""
        adapter = OpenAIAdapter(api_key="test-key", model="gpt-4o-mini")
        assert isinstance(adapter, AIService)

    def test_requires_api_key(self):
        """Test that a missing key is rejected."""
        with pytest.raises(ValueError):
            OpenAIAdapter(api_key="", model="gpt-4o-mini")

    def test_complete_sends_chat_request(self, mocker):
        """Test message layout, decoding parameters and response mapping."""
        adapter = OpenAIAdapter(api_key="test-key", model="gpt-4o-mini")
        usage = mocker.Mock(prompt_tokens=12, completion_tokens=3)
        mock_openai = mocker.patch("pave.ai.openai_adapter.OpenAI")
        mock_openai.return_value = mock_client_returning(mocker, "ANSWER: Paris", usage)

        response = adapter.complete(REQUEST)

        kwargs = mock_openai.return_value.chat.completions.create.call_args.kwargs
        assert kwargs["model"] == "gpt-4o-mini"
        assert kwargs["messages"] == [
            {"role": "system", "content": REQUEST.system_text},
            {"role": "user", "content": "Question?"},
        ]
        assert kwargs["temperature"] == 0.0
        assert kwargs["seed"] == 7
        assert mock_openai.call_args.kwargs["max_retries"] == 0

        assert isinstance(response, CompletionResponse)
        assert response.text == "ANSWER: Paris"
        assert response.input_token_count == 12
        assert response.output_token_count == 3
        assert adapter.call_count == 1

    def test_missing_usage_defaults_to_zero(self, mocker):
        """Test that absent usage data gives zero token counts."""
        adapter = OpenAIAdapter(api_key="test-key", model="m")
        mock_openai = mocker.patch("pave.ai.openai_adapter.OpenAI")
        mock_openai.return_value = mock_client_returning(mocker, "yes", usage=None)
        response = adapter.complete(REQUEST)
        assert response.input_token_count == 0
        assert response.output_token_count == 0

    @pytest.mark.parametrize(
        "message,expected",
        [
            ("Request timed out", BackendTimeoutError),
            ("Rate limit exceeded", RateLimitExceededError),
            ("Incorrect API key provided (401)", AuthenticationError),
            ("503 Service Unavailable", ServerError),
            ("something else", AIServiceError),
        ],
    )
    def test_error_mapping(self, mocker, message, expected):
        """Test that transport failures map onto backend errors."""
        adapter = OpenAIAdapter(api_key="test-key", model="m")
        mock_client = mocker.Mock()
        mock_client.chat.completions.create.side_effect = Exception(message)
        mocker.patch("pave.ai.openai_adapter.OpenAI", return_value=mock_client)
        with pytest.raises(expected):
            adapter.complete(REQUEST)

    def test_validate_config(self):
        """Test base URL validation."""
        assert OpenAIAdapter(api_key="k", model="m", base_url="https://x/v1").validate_config()
        with pytest.raises(ConfigurationError):
            OpenAIAdapter(api_key="k", model="m", base_url="ftp://x").validate_config()


class TestAIOrchestrator:
    """Tests for backend selection."""

    def test_live_backend(self):
        """Test that the live kind builds the OpenAI adapter."""
        config = BackendConfiguration(kind="live", api_key="k", model="gpt-4o-mini")
        orchestrator = AIOrchestrator(config)
        service = orchestrator.get_service()
        assert isinstance(service, OpenAIAdapter)
        assert orchestrator.get_service() is service

    def test_scripted_backend(self, tmp_path):
        """Test that the scripted kind loads the script file."""
        script = tmp_path / "script.yaml"
        script.write_text("- 'ANSWER: yes'\n")
        orchestrator = AIOrchestrator(BackendConfiguration(kind="scripted", script=Path(script)))
        assert isinstance(orchestrator.get_service(), ScriptedBackend)

    def test_retry_policy_from_config(self):
        """Test that the retry policy mirrors the configuration."""
        config = BackendConfiguration(
            kind="live",
            api_key="k",
            max_attempts=5,
            base_backoff_ms=10,
            retry_on=frozenset({"timeout"}),
        )
        policy = AIOrchestrator(config).retry_policy()
        assert policy.max_attempts == 5
        assert policy.base_backoff_ms == 10
        assert policy.retry_on == frozenset({"timeout"})
