"""Deterministic scripted backend for offline runs and tests.

Responses are queued per stage tag (decompose, draft, score, revise, judge)
and, optionally, in an untagged default queue. A request takes the next
response from its own stage queue first and falls back to the default queue.
"""

import logging
import threading
from collections import deque
from pathlib import Path
from typing import Deque, Dict, List, Mapping, Optional, Sequence, Tuple

import yaml

from .service import AIService, CompletionRequest, CompletionResponse
from ..core.exceptions import ConfigurationError, ScriptExhaustedError
from ..core.models import Stage, stage_from_text

logger = logging.getLogger(__name__)

DEFAULT_QUEUE = "default"


class ScriptedBackend(AIService):
    """Replays queued responses; bit-deterministic for a fixed request sequence."""

    def __init__(
        self,
        responses: Optional[Sequence[str]] = None,
        by_stage: Optional[Mapping[str, Sequence[str]]] = None,
        repeat: bool = False,
    ):
        """Initialize the scripted backend.

        Args:
            responses: Untagged responses, served to any stage in order
            by_stage: Responses keyed by stage name
            repeat: Cycle through each queue instead of exhausting it
        """
        super().__init__()
        self.repeat = repeat
        self._lock = threading.Lock()
        self._queues: Dict[str, Deque[str]] = {DEFAULT_QUEUE: deque(responses or [])}
        self._cursors: Dict[str, int] = {}
        self.requests: List[Tuple[Optional[Stage], CompletionRequest]] = []

        for stage, texts in (by_stage or {}).items():
            key = Stage(stage).value if not isinstance(stage, Stage) else stage.value
            self._queues[key] = deque(texts)

    def queue(self, text: str, stage: Optional[Stage] = None) -> None:
        """Append a response to a stage queue (or the default queue)."""
        key = stage.value if stage is not None else DEFAULT_QUEUE
        with self._lock:
            self._queues.setdefault(key, deque()).append(text)

    def remaining(self, stage: Optional[Stage] = None) -> int:
        """Responses left in one queue."""
        key = stage.value if stage is not None else DEFAULT_QUEUE
        with self._lock:
            return len(self._queues.get(key, ()))

    def _take(self, key: str) -> Optional[str]:
        queue = self._queues.get(key)
        if not queue:
            return None
        if not self.repeat:
            return queue.popleft()
        cursor = self._cursors.get(key, 0)
        self._cursors[key] = cursor + 1
        return queue[cursor % len(queue)]

    def _complete(self, request: CompletionRequest) -> CompletionResponse:
        stage = stage_from_text(request.system_text)
        with self._lock:
            self.requests.append((stage, request))
            text = self._take(stage.value) if stage is not None else None
            if text is None:
                text = self._take(DEFAULT_QUEUE)

        if text is None:
            label = stage.value if stage is not None else "untagged"
            raise ScriptExhaustedError(f"No scripted response left for {label} request")

        logger.debug(f"Scripted response for {stage.value if stage else 'untagged'} request")
        return CompletionResponse(
            text=text,
            input_token_count=0,
            output_token_count=0,
            latency_ms=0,
        )

    def validate_config(self) -> bool:
        """A scripted backend is always usable; exhaustion surfaces per call."""
        return True

    @classmethod
    def from_file(cls, path: Path) -> "ScriptedBackend":
        """Load a YAML script.

        The file is either a list of untagged responses or a mapping from stage
        name (plus ``default``) to a list of responses, with an optional
        top-level ``repeat: true``.

        Args:
            path: Path to the script file

        Returns:
            ScriptedBackend: Backend with the script queued

        Raises:
            ConfigurationError: If the file is unreadable or malformed
        """
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigurationError(f"Cannot read backend script {path}: {e}")
        except UnicodeDecodeError as e:
            raise ConfigurationError(f"Backend script {path} is not valid UTF-8: {e}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Backend script {path} is not valid YAML: {e}")

        if isinstance(data, list):
            return cls(responses=[str(item) for item in data])

        if not isinstance(data, dict):
            raise ConfigurationError(f"Backend script {path} must be a list or a mapping")

        data = dict(data)
        repeat = bool(data.pop("repeat", False))
        default = data.pop(DEFAULT_QUEUE, None) or []
        by_stage: Dict[str, List[str]] = {}
        for key, texts in data.items():
            try:
                Stage(key)
            except ValueError:
                raise ConfigurationError(f"Backend script {path}: unknown stage '{key}'")
            if not isinstance(texts, list):
                raise ConfigurationError(f"Backend script {path}: '{key}' must be a list")
            by_stage[key] = ["" if item is None else str(item) for item in texts]

        return cls(
            responses=["" if item is None else str(item) for item in default],
            by_stage=by_stage,
            repeat=repeat,
        )
