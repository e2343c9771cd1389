"""Configuration models for pave.

This module defines configuration schemas for the validation pipeline, the
completion backend and the merged command-line view, plus the YAML config
file loader.
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, FrozenSet, Mapping, Optional

import yaml

from .exceptions import ConfigurationError
from .models import Variant

logger = logging.getLogger(__name__)

DEFAULT_TAU = 0.70
DEFAULT_MAX_FACTS = 16
RETRYABLE_KINDS = frozenset({"timeout", "rate_limited", "server_error"})


@dataclass(frozen=True)
class PipelineConfig:
    """Per-run settings shared by every example."""

    tau: float = DEFAULT_TAU
    variant: Variant = Variant.PAVE
    max_facts: int = DEFAULT_MAX_FACTS
    max_revisions: int = 1
    temperature: float = 0.0
    seed: Optional[int] = None
    store_prompts: bool = False

    def __post_init__(self):
        """Validate pipeline configuration."""
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", Variant(self.variant))

        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in range [0.0, 1.0]")

        if self.max_facts < 1:
            raise ValueError("max_facts must be > 0")

        if self.max_revisions < 1:
            raise ValueError("max_revisions must be >= 1")

        if self.temperature < 0.0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class BackendConfiguration:
    """Completion backend selection and transport settings."""

    kind: str = "live"
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    api_key: Optional[str] = field(default=None, repr=False)
    timeout_seconds: float = 60.0
    max_output_tokens: int = 512
    max_attempts: int = 3
    base_backoff_ms: int = 500
    retry_on: FrozenSet[str] = RETRYABLE_KINDS
    script: Optional[Path] = None

    def __post_init__(self):
        """Validate backend configuration."""
        if self.kind not in {"live", "scripted"}:
            raise ValueError("backend kind must be in {'live', 'scripted'}")

        if self.kind == "live" and not self.api_key:
            raise ValueError("PAVE_API_KEY must be set for the live backend")

        if self.kind == "scripted" and self.script is None:
            raise ValueError("scripted backend requires a script file")

        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be > 0")

        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be > 0")

        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

        if self.base_backoff_ms < 1:
            raise ValueError("base_backoff_ms must be > 0")

        unknown = set(self.retry_on) - RETRYABLE_KINDS
        if unknown:
            raise ValueError(f"retry_on contains unknown kinds: {sorted(unknown)}")


# ============================================================================
# Command-line view
# ============================================================================


@dataclass(frozen=True)
class CliConfig:
    """Merged view of config-file values overridden by flags."""

    variant: str = Variant.PAVE.value
    tau: float = DEFAULT_TAU
    max_facts: int = DEFAULT_MAX_FACTS
    max_revisions: int = 1
    temperature: float = 0.0
    seed: Optional[int] = None
    parallelism: int = 1
    backend: str = "live"
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    template_dir: Optional[str] = None
    dataset: Optional[str] = None
    traces: str = "traces.jsonl"
    predictions: str = "predictions.jsonl"
    report: Optional[str] = None
    judge_mode: str = "normalized"
    script: Optional[str] = None
    store_prompts: bool = False
    max_attempts: int = 3
    base_backoff_ms: int = 500
    timeout_seconds: float = 60.0

    def validate(self) -> list[str]:
        """Validate configuration values.

        Returns:
            List of validation error messages (empty if valid)
        """
        errors = []

        if self.variant not in {v.value for v in Variant}:
            errors.append(f"--variant: unknown variant '{self.variant}'")

        if not 0.0 <= self.tau <= 1.0:
            errors.append(f"--tau: must be in range [0, 1], got {self.tau}")

        if self.max_facts < 1:
            errors.append("--max-facts: must be > 0")

        if self.max_revisions < 1:
            errors.append("--max-revisions: must be >= 1")

        if self.temperature < 0:
            errors.append("--temperature: must be >= 0")

        if self.parallelism < 1:
            errors.append("--parallelism: must be >= 1")

        if self.backend not in {"live", "scripted"}:
            errors.append(f"--backend: must be 'live' or 'scripted', got '{self.backend}'")

        if self.backend == "scripted" and not self.script:
            errors.append("--script: required when --backend is 'scripted'")

        if self.judge_mode not in {"normalized", "model_judge"}:
            errors.append(f"--judge-mode: unknown mode '{self.judge_mode}'")

        if self.max_attempts < 1:
            errors.append("--max-attempts: must be >= 1")

        if self.base_backoff_ms < 1:
            errors.append("--base-backoff-ms: must be > 0")

        if self.timeout_seconds <= 0:
            errors.append("--timeout-seconds: must be > 0")

        return errors

    @classmethod
    def from_sources(
        cls,
        file_values: Optional[Mapping[str, Any]] = None,
        flag_values: Optional[Mapping[str, Any]] = None,
    ) -> "CliConfig":
        """Merge with precedence flag > config file > built-in default.

        Args:
            file_values: Values loaded from a config file
            flag_values: Values given on the command line (None means "not given")

        Returns:
            CliConfig: Merged configuration

        Raises:
            ConfigurationError: If a config-file key is unknown
        """
        known = {f.name for f in fields(cls)}
        merged: Dict[str, Any] = {}

        for key, value in (file_values or {}).items():
            if key not in known:
                raise ConfigurationError(f"Unknown config key: {key}")
            merged[key] = _coerce(key, value)

        for key, value in (flag_values or {}).items():
            if key in known and value is not None:
                merged[key] = _coerce(key, value)

        return cls(**merged)

    def to_dict(self) -> Dict[str, Any]:
        """Serializable view recorded in the run summary."""
        return asdict(self)

    def pipeline_config(self) -> PipelineConfig:
        """Build the pipeline settings for this run."""
        return PipelineConfig(
            tau=self.tau,
            variant=Variant(self.variant),
            max_facts=self.max_facts,
            max_revisions=self.max_revisions,
            temperature=self.temperature,
            seed=self.seed,
            store_prompts=self.store_prompts,
        )

    def backend_config(self, api_key: Optional[str] = None) -> BackendConfiguration:
        """Build the backend settings for this run."""
        return BackendConfiguration(
            kind=self.backend,
            base_url=self.base_url,
            model=self.model,
            api_key=api_key,
            timeout_seconds=self.timeout_seconds,
            max_attempts=self.max_attempts,
            base_backoff_ms=self.base_backoff_ms,
            script=Path(self.script) if self.script else None,
        )


_INT_KEYS = {"max_facts", "max_revisions", "seed", "parallelism", "max_attempts", "base_backoff_ms"}
_FLOAT_KEYS = {"tau", "temperature", "timeout_seconds"}
_BOOL_KEYS = {"store_prompts"}


def _coerce(key: str, value: Any) -> Any:
    """Convert a config value to the field's type."""
    if value is None:
        return None
    try:
        if key in _BOOL_KEYS:
            if isinstance(value, str):
                return value.strip().lower() in {"1", "true", "yes", "on"}
            return bool(value)
        if key in _INT_KEYS:
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError(value)
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
    except (TypeError, ValueError, OverflowError):
        raise ConfigurationError(f"Config key '{key}' has an invalid value: {value!r}")
    return str(value)


def load_config_file(path: Path) -> Dict[str, Any]:
    """Load a flat YAML mapping of config keys.

    Args:
        path: Path to configuration file

    Returns:
        Dict of key/value pairs (empty for an empty file)

    Raises:
        ConfigurationError: If the file is unreadable or not a mapping
    """
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}")
    except UnicodeDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid UTF-8: {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config file {path} is not valid YAML: {e}")

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must contain a key-value mapping")

    # Keys mirror flag names; accept the dashed spelling too.
    values = {str(key).replace("-", "_"): value for key, value in data.items()}
    logger.debug(f"Loaded {len(values)} config value(s) from {path}")
    return values
