"""Core data models for pave.

This module defines the value types that flow through the validation layer:
questions and evidence, atomic facts, drafts, support assessments, final
answers and the audit trace, together with the threshold gate and the trace
validator. Nothing here depends on a model backend.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

if TYPE_CHECKING:
    from .config import PipelineConfig

TRACE_SCHEMA_VERSION = 1


# ============================================================================
# Enumerations
# ============================================================================


class Variant(Enum):
    """Pipeline variant compared in the ablation harness."""

    BASELINE = "baseline"
    IMPORTANCE_WEIGHTING = "importance_weighting"
    SUPPORT_SCORING = "support_scoring"
    PAVE = "pave"


class TaskKind(Enum):
    """Answer format expected by a QA record."""

    LABEL3 = "label3"  # yes / no / maybe
    SPAN = "span"  # shortest supporting span


class Stage(Enum):
    """Backend call stage; the value is embedded as a tag in rendered prompts."""

    DECOMPOSE = "decompose"
    DRAFT = "draft"
    SCORE = "score"
    REVISE = "revise"
    JUDGE = "judge"


_STAGE_TAG = re.compile(r"^\s*\[stage:([a-z_]+)\]")


def stage_tag(stage: Stage) -> str:
    """Tag placed at the start of a rendered system prompt."""
    return f"[stage:{stage.value}]"


def stage_from_text(system_text: str) -> Optional[Stage]:
    """Recover the stage from a tagged system prompt, if tagged."""
    match = _STAGE_TAG.match(system_text or "")
    if not match:
        return None
    try:
        return Stage(match.group(1))
    except ValueError:
        return None


class FinalizationDecision(Enum):
    """Outcome of the support gate."""

    KEEP = "keep"
    REVISE = "revise"


# ============================================================================
# Inputs
# ============================================================================


@dataclass(frozen=True)
class Question:
    """A user question with an opaque identifier."""

    id: str
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("Question text must not be empty")


@dataclass(frozen=True)
class EvidenceContext:
    """Retrieved passages handed to the validation layer, in retrieval order."""

    passages: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "passages", tuple(self.passages))
        if not self.passages:
            raise ValueError("EvidenceContext requires at least one passage")
        for passage in self.passages:
            if not passage or not passage.strip():
                raise ValueError("EvidenceContext passages must not be empty")

    @property
    def m(self) -> int:
        """Number of passages."""
        return len(self.passages)


# ============================================================================
# Stage results
# ============================================================================


@dataclass(frozen=True)
class AtomicFact:
    """One question-conditioned premise."""

    index: int
    text: str
    salience: Optional[float] = None

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("AtomicFact index must be >= 1")
        if not self.text or not self.text.strip():
            raise ValueError("AtomicFact text must not be empty")
        if self.salience is not None and not 0.0 <= self.salience <= 1.0:
            raise ValueError("AtomicFact salience must be in range [0.0, 1.0]")


@dataclass(frozen=True)
class FactList:
    """Ordered premises; empty only for variants that skip decomposition."""

    facts: Tuple[AtomicFact, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "facts", tuple(self.facts))
        for position, fact in enumerate(self.facts, start=1):
            if fact.index != position:
                raise ValueError(
                    f"FactList indices must run 1..n without gaps; "
                    f"position {position} has index {fact.index}"
                )

    @classmethod
    def from_texts(
        cls, texts: Sequence[str], saliences: Optional[Sequence[Optional[float]]] = None
    ) -> "FactList":
        """Build a list numbered 1..n from plain statements."""
        weights = list(saliences) if saliences is not None else [None] * len(texts)
        return cls(
            tuple(
                AtomicFact(index=i, text=text, salience=weight)
                for i, (text, weight) in enumerate(zip(texts, weights), start=1)
            )
        )

    @property
    def n(self) -> int:
        """Number of facts."""
        return len(self.facts)

    @property
    def is_weighted(self) -> bool:
        """Whether every fact carries a salience."""
        return bool(self.facts) and all(f.salience is not None for f in self.facts)

    def __iter__(self):
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)


@dataclass(frozen=True)
class Draft:
    """Draft answer with its short rationale."""

    answer: str
    rationale: str = ""

    def __post_init__(self):
        if not self.answer or not self.answer.strip():
            raise ValueError("Draft answer must not be empty")


@dataclass(frozen=True)
class SupportAssessment:
    """Premise-support score returned by the scorer."""

    score: float
    parse_ok: bool
    raw_text: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError("SupportAssessment score must be in range [0.0, 1.0]")
        if not self.parse_ok and self.score != 0.0:
            raise ValueError("Unparsed support assessments must carry score 0.0")

    @classmethod
    def unparsed(cls, raw_text: str) -> "SupportAssessment":
        """Conservative fallback for unreadable scorer output."""
        return cls(score=0.0, parse_ok=False, raw_text=raw_text)


@dataclass(frozen=True)
class FinalAnswer:
    """Committed answer and how it was reached."""

    text: str
    was_revised: bool
    backend_calls: int
    revisions: Optional[int] = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("FinalAnswer text must not be empty")
        if self.backend_calls < 1:
            raise ValueError("FinalAnswer backend_calls must be > 0")
        if self.revisions is None:
            object.__setattr__(self, "revisions", int(self.was_revised))
        if self.was_revised != (self.revisions > 0):
            raise ValueError("was_revised must be true exactly when revisions > 0")


# ============================================================================
# Gate
# ============================================================================


def gate(support: SupportAssessment, tau: float) -> FinalizationDecision:
    """Keep the draft iff its support reaches the threshold (boundary inclusive)."""
    if support.score >= tau:
        return FinalizationDecision.KEEP
    return FinalizationDecision.REVISE


# ============================================================================
# Audit trace
# ============================================================================


@dataclass(frozen=True)
class AuditTrace:
    """Machine-readable record of how one answer was committed."""

    question_id: str
    variant: Variant
    facts: FactList
    draft: Draft
    support: Optional[SupportAssessment]
    final: FinalAnswer
    tau_used: float
    started_at: datetime
    ended_at: datetime
    prompt_fingerprints: Tuple[str, ...] = ()
    schema_version: int = TRACE_SCHEMA_VERSION
    prompts: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "prompt_fingerprints", tuple(self.prompt_fingerprints))
        if self.prompts is not None:
            object.__setattr__(self, "prompts", tuple(self.prompts))

    @property
    def decision(self) -> Optional[FinalizationDecision]:
        """Gate decision recorded by this trace, if the variant scored."""
        if self.support is None:
            return None
        return gate(self.support, self.tau_used)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the JSONL trace schema."""
        data: Dict[str, Any] = {
            "question_id": self.question_id,
            "variant": self.variant.value,
            "facts": [
                {"index": f.index, "text": f.text, "salience": f.salience} for f in self.facts
            ],
            "draft": {"answer": self.draft.answer, "rationale": self.draft.rationale},
            "support": None
            if self.support is None
            else {
                "score": self.support.score,
                "parse_ok": self.support.parse_ok,
                "raw_text": self.support.raw_text,
            },
            "final": {
                "text": self.final.text,
                "was_revised": self.final.was_revised,
                "backend_calls": self.final.backend_calls,
                "revisions": self.final.revisions,
            },
            "tau_used": self.tau_used,
            "started_at": self.started_at.isoformat(),
            "ended_at": self.ended_at.isoformat(),
            "prompt_fingerprints": list(self.prompt_fingerprints),
            "schema_version": self.schema_version,
        }
        if self.prompts is not None:
            data["prompts"] = list(self.prompts)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuditTrace":
        """Rebuild a trace from its JSONL representation."""
        support = data.get("support")
        final = data["final"]
        prompts = data.get("prompts")
        return cls(
            question_id=data["question_id"],
            variant=Variant(data["variant"]),
            facts=FactList(
                tuple(
                    AtomicFact(index=f["index"], text=f["text"], salience=f.get("salience"))
                    for f in data.get("facts", [])
                )
            ),
            draft=Draft(
                answer=data["draft"]["answer"], rationale=data["draft"].get("rationale", "")
            ),
            support=None
            if support is None
            else SupportAssessment(
                score=support["score"],
                parse_ok=support["parse_ok"],
                raw_text=support.get("raw_text", ""),
            ),
            final=FinalAnswer(
                text=final["text"],
                was_revised=final["was_revised"],
                backend_calls=final["backend_calls"],
                revisions=final.get("revisions"),
            ),
            tau_used=data["tau_used"],
            started_at=datetime.fromisoformat(data["started_at"]),
            ended_at=datetime.fromisoformat(data["ended_at"]),
            prompt_fingerprints=tuple(data.get("prompt_fingerprints", [])),
            schema_version=data.get("schema_version", TRACE_SCHEMA_VERSION),
            prompts=None if prompts is None else tuple(prompts),
        )


# Stage calls each variant makes before any revision.
BASE_CALLS: Dict[Variant, int] = {
    Variant.BASELINE: 1,
    Variant.IMPORTANCE_WEIGHTING: 2,
    Variant.SUPPORT_SCORING: 2,
    Variant.PAVE: 3,
}

_DECOMPOSING = {Variant.IMPORTANCE_WEIGHTING, Variant.PAVE}
_SCORING = {Variant.SUPPORT_SCORING, Variant.PAVE}


def validate_trace(trace: AuditTrace, config: "PipelineConfig") -> List[str]:
    """
    Check a trace against the invariants of its variant.

    Args:
        trace: AuditTrace to validate
        config: PipelineConfig the trace is expected to come from

    Returns:
        List of violation descriptions (empty if valid)
    """
    violations: List[str] = []
    variant = trace.variant.value

    if trace.variant != config.variant:
        violations.append(
            f"variant {variant} does not match configured variant {config.variant.value}"
        )

    if trace.tau_used != config.tau:
        violations.append(f"tau_used {trace.tau_used} differs from configured tau {config.tau}")

    if trace.variant in _DECOMPOSING:
        if trace.facts.n == 0:
            violations.append(f"facts missing for variant {variant}")
        elif trace.facts.n > config.max_facts:
            violations.append(f"fact count {trace.facts.n} exceeds max_facts {config.max_facts}")
    elif trace.facts.n > 0:
        violations.append(f"facts present for variant {variant}")

    weighted = trace.facts.is_weighted
    if trace.variant == Variant.IMPORTANCE_WEIGHTING and trace.facts.n and not weighted:
        violations.append("salience missing for variant importance_weighting")

    if trace.variant in _SCORING:
        if trace.support is None:
            violations.append(f"support missing for variant {variant}")
    elif trace.support is not None:
        violations.append(f"support present for variant {variant}")

    if trace.support is not None:
        expected_revision = trace.support.score < trace.tau_used
    else:
        expected_revision = False
    if trace.final.was_revised != expected_revision:
        violations.append("revision flag inconsistent with gate")

    # Exact call counts only hold without re-scoring rounds.
    if config.max_revisions == 1:
        expected_calls = BASE_CALLS[trace.variant] + int(trace.final.was_revised)
        if trace.final.backend_calls != expected_calls:
            violations.append(
                f"backend_calls {trace.final.backend_calls} != expected {expected_calls} "
                f"for variant {variant}"
            )
    elif trace.final.revisions > config.max_revisions:
        violations.append(
            f"revisions {trace.final.revisions} exceed max_revisions {config.max_revisions}"
        )

    if trace.ended_at < trace.started_at:
        violations.append("ended_at precedes started_at")

    if trace.schema_version != TRACE_SCHEMA_VERSION:
        violations.append(f"unsupported schema_version {trace.schema_version}")

    return violations
