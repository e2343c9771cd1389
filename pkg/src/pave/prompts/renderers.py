"""Stage prompt rendering.

Turns core-model values into CompletionRequests for the decomposition,
drafting, scoring, revision and judge stages. Rendering is pure: the same
inputs always give the same text and therefore the same fingerprint.
"""

import hashlib
from typing import Any, Dict, List, Optional, Sequence

from .manager import PromptLibrary
from ..ai.service import CompletionRequest
from ..core.models import (
    Draft,
    EvidenceContext,
    FactList,
    Question,
    Stage,
    SupportAssessment,
    TaskKind,
    stage_tag,
)


def fingerprint(request: CompletionRequest) -> str:
    """Stable SHA-256 content hash of a rendered prompt."""
    payload = f"{request.system_text}\n\x00\n{request.user_text}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def _facts_payload(facts: FactList) -> List[Dict[str, Any]]:
    return [{"index": f.index, "text": f.text, "salience": f.salience} for f in facts]


def _grounding(
    facts: Optional[FactList], context: Optional[EvidenceContext]
) -> Dict[str, Any]:
    """Placeholders for whichever grounding source was supplied."""
    if (facts is None) == (context is None):
        raise ValueError("exactly one of facts or context must be supplied")
    if facts is not None:
        if facts.n == 0:
            raise ValueError("facts must not be empty")
        return {
            "use_facts": True,
            "facts": _facts_payload(facts),
            "passages": [],
            "weighted": facts.is_weighted,
        }
    return {
        "use_facts": False,
        "facts": [],
        "passages": list(context.passages),
        "weighted": False,
    }


class PromptRenderer:
    """Renders stage prompts from a prompt library with fixed decoding settings."""

    def __init__(
        self,
        library: Optional[PromptLibrary] = None,
        temperature: float = 0.0,
        max_output_tokens: int = 512,
        seed: Optional[int] = None,
    ):
        """Initialize the renderer.

        Args:
            library: Prompt library (default: built-in templates)
            temperature: Decoding temperature for every request
            max_output_tokens: Output token cap for every request
            seed: Optional decoding seed, forwarded where the endpoint supports it
        """
        self.library = library or PromptLibrary()
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.seed = seed

    def _request(self, stage: Stage, context: Dict[str, Any]) -> CompletionRequest:
        system, user = self.library.get_template(stage).render(context)
        system_text = stage_tag(stage) if not system else f"{stage_tag(stage)}\n{system}"
        return CompletionRequest(
            system_text=system_text,
            user_text=user,
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            seed=self.seed,
        )

    def render_decompose(
        self,
        question: Question,
        context: EvidenceContext,
        max_facts: int,
        weighted: bool = False,
    ) -> CompletionRequest:
        """Ask for question-conditioned atomic facts, one numbered fact per line."""
        return self._request(
            Stage.DECOMPOSE,
            {
                "question": question.text,
                "passages": list(context.passages),
                "max_facts": max_facts,
                "weighted": weighted,
            },
        )

    def render_draft(
        self,
        question: Question,
        facts: Optional[FactList] = None,
        context: Optional[EvidenceContext] = None,
        task_kind: TaskKind = TaskKind.SPAN,
    ) -> CompletionRequest:
        """Ask for ANSWER/RATIONALE grounded in facts or in raw context."""
        values = _grounding(facts, context)
        values.update({"question": question.text, "task_kind": task_kind.value})
        return self._request(Stage.DRAFT, values)

    def render_score(
        self,
        question: Question,
        draft: Draft,
        facts: Optional[FactList] = None,
        context: Optional[EvidenceContext] = None,
    ) -> CompletionRequest:
        """Ask for a premise-support score ending in a SUPPORT line."""
        values = _grounding(facts, context)
        values.update(
            {"question": question.text, "answer": draft.answer, "rationale": draft.rationale}
        )
        return self._request(Stage.SCORE, values)

    def render_revise(
        self,
        question: Question,
        draft: Draft,
        support: SupportAssessment,
        facts: Optional[FactList] = None,
        context: Optional[EvidenceContext] = None,
        task_kind: TaskKind = TaskKind.SPAN,
    ) -> CompletionRequest:
        """Ask for a corrected answer that stays within the premises."""
        values = _grounding(facts, context)
        values.update(
            {
                "question": question.text,
                "answer": draft.answer,
                "rationale": draft.rationale,
                "score": support.score,
                "task_kind": task_kind.value,
            }
        )
        return self._request(Stage.REVISE, values)

    def render_judge(
        self, question: str, prediction: str, references: Sequence[str]
    ) -> CompletionRequest:
        """Ask whether a predicted span is equivalent to any reference answer."""
        return self._request(
            Stage.JUDGE,
            {"question": question, "prediction": prediction, "references": list(references)},
        )
