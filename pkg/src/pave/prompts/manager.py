"""Prompt template management.

This module defines the stage prompt template model and the prompt library
that loads one template file per stage, with a built-in set shipped inside the
package and an optional user directory overriding individual stages.

Template files are plain text: the system part, a line consisting of ``---``,
then the user part. ``{{placeholder}}`` markers are rendered with Jinja2.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional

from jinja2 import Environment, StrictUndefined, TemplateSyntaxError, meta

from ..core.exceptions import PromptError
from ..core.models import Stage

logger = logging.getLogger(__name__)

BUILTIN_TEMPLATE_DIR = Path(__file__).parent / "templates"
SECTION_SEPARATOR = "---"

_CONTEXT_VARS = {"question", "facts", "passages", "use_facts", "weighted"}

# Placeholders each renderer supplies; templates may use any subset.
STAGE_VARIABLES: Dict[Stage, FrozenSet[str]] = {
    Stage.DECOMPOSE: frozenset({"question", "passages", "max_facts", "weighted"}),
    Stage.DRAFT: frozenset(_CONTEXT_VARS | {"task_kind"}),
    Stage.SCORE: frozenset(_CONTEXT_VARS | {"answer", "rationale"}),
    Stage.REVISE: frozenset(_CONTEXT_VARS | {"answer", "rationale", "score", "task_kind"}),
    Stage.JUDGE: frozenset({"question", "references", "prediction"}),
}

_environment = Environment(
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=False,
    autoescape=False,
)


@dataclass
class PromptTemplate:
    """System and user prompt text for one pipeline stage."""

    stage: Stage
    system_text: str
    user_text: str
    placeholders: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Validate and initialize prompt template."""
        if isinstance(self.stage, str):
            self.stage = Stage(self.stage)

        if not self.user_text.strip():
            raise ValueError("user_text must not be empty")

        try:
            found = self._extract_placeholders(self.system_text) | self._extract_placeholders(
                self.user_text
            )
        except TemplateSyntaxError as e:
            raise ValueError(f"{self.stage.value} template has invalid syntax: {e}")

        unknown = found - STAGE_VARIABLES[self.stage]
        if unknown:
            raise ValueError(
                f"{self.stage.value} template references unknown placeholders: {sorted(unknown)}"
            )

        if not self.placeholders:
            self.placeholders = sorted(found)

    @staticmethod
    def _extract_placeholders(text: str) -> set:
        """Extract placeholder names referenced by template text."""
        return set(meta.find_undeclared_variables(_environment.parse(text)))

    def render(self, context: Mapping[str, Any]) -> tuple[str, str]:
        """Render system and user text.

        Args:
            context: Mapping of placeholder names to values

        Returns:
            tuple[str, str]: (system_text, user_text)

        Raises:
            PromptError: If a referenced placeholder is missing from context
        """
        try:
            system = _environment.from_string(self.system_text).render(**context)
            user = _environment.from_string(self.user_text).render(**context)
        except Exception as e:
            raise PromptError(f"Failed to render {self.stage.value} prompt: {e}")
        return system.strip(), user.strip()

    @classmethod
    def from_text(cls, stage: Stage, text: str) -> "PromptTemplate":
        """Split template file text into its system and user parts."""
        lines = text.splitlines()
        for position, line in enumerate(lines):
            if line.strip() == SECTION_SEPARATOR:
                system = "\n".join(lines[:position])
                user = "\n".join(lines[position + 1 :])
                return cls(stage=stage, system_text=system, user_text=user)
        # No separator: everything is user text.
        return cls(stage=stage, system_text="", user_text=text)


@dataclass
class PromptLibrary:
    """Stage templates loaded from the built-in set and an optional override directory."""

    library_path: Optional[Path] = None
    templates: Dict[Stage, PromptTemplate] = field(default_factory=dict)
    version: str = "builtin"

    def __post_init__(self):
        """Load every stage template."""
        if isinstance(self.library_path, str):
            self.library_path = Path(self.library_path)

        if self.library_path is not None:
            self.library_path = self.library_path.expanduser()
            if not self.library_path.exists():
                raise PromptError(f"Template directory does not exist: {self.library_path}")
            if not self.library_path.is_dir():
                raise PromptError(f"Template path is not a directory: {self.library_path}")

        self.version = self._read_version()

        for stage in Stage:
            if stage not in self.templates:
                self.templates[stage] = self._load_stage(stage)

    def _read_version(self) -> str:
        """Version of the prompt set, from ``_metadata.json``."""
        version = "builtin"
        for directory in (BUILTIN_TEMPLATE_DIR, self.library_path):
            if directory is None:
                continue
            metadata_file = directory / "_metadata.json"
            if not metadata_file.exists():
                continue
            try:
                metadata = json.loads(metadata_file.read_text(encoding="utf-8"))
                version = str(metadata.get("version", version))
            except (OSError, ValueError) as e:
                logger.warning(f"Ignoring unreadable template metadata {metadata_file}: {e}")
        return version

    def _load_stage(self, stage: Stage) -> PromptTemplate:
        """Load a stage template, preferring the override directory."""
        candidates = []
        if self.library_path is not None:
            candidates.append(self.library_path / f"{stage.value}.txt")
        candidates.append(BUILTIN_TEMPLATE_DIR / f"{stage.value}.txt")

        for template_file in candidates:
            if template_file.exists():
                try:
                    template = PromptTemplate.from_text(
                        stage, template_file.read_text(encoding="utf-8")
                    )
                except ValueError as e:
                    raise PromptError(f"Invalid template {template_file}: {e}")
                logger.debug(f"Loaded {stage.value} template from {template_file}")
                return template

        raise PromptError(f"No template found for stage '{stage.value}'")

    def get_template(self, stage: Stage) -> PromptTemplate:
        """Template for a stage.

        Args:
            stage: Pipeline stage

        Returns:
            PromptTemplate: The stage template
        """
        return self.templates[stage]

    def list_templates(self) -> List[PromptTemplate]:
        """Get all loaded templates in stage order."""
        return [self.templates[stage] for stage in Stage]
