"""Parsing of stage outputs into core-model values.

Parsers are lenient about format drift and record every recovery as a
warning; they fail hard only when nothing usable is present.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Generic, List, Optional, TypeVar

from ..core.exceptions import EmptyDraftError, EmptyFactListError
from ..core.models import AtomicFact, Draft, FactList, SupportAssessment

logger = logging.getLogger(__name__)

T = TypeVar("T")

_FACT_LINE = re.compile(r"^\s*(\d+)\s*[.)](?=\s|$)\s*(.*?)\s*$")
_LEADING_MARKERS = re.compile(r"^(?:[-*•]+\s*|\d+[.)](?=\s)\s*)+")
_SALIENCE = re.compile(r"^(.*?)\s*\[\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*\]$")
_ANSWER = re.compile(r"^\s*\**\s*ANSWER\s*\**\s*:\s*\**\s*(.*)$", re.IGNORECASE)
_RATIONALE = re.compile(r"^\s*\**\s*RATIONALE\s*\**\s*:\s*\**\s*(.*)$", re.IGNORECASE)
_SUPPORT = re.compile(r"SUPPORT\s*\**\s*:\s*\**\s*(.*)$", re.IGNORECASE)
_NUMBER = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)"
_SCORE_VALUE = re.compile(rf"^({_NUMBER})(?:\s*/\s*({_NUMBER}))?[\s*.]*$")
_BARE_SCORE = re.compile(rf"^\s*({_NUMBER})(?:\s*/\s*({_NUMBER}))?\s*$")


@dataclass
class ParseOutcome(Generic[T]):
    """Parsed payload plus any lenient-recovery warnings."""

    value: T
    warnings: List[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        """Whether the output followed the instructed format exactly."""
        return not self.warnings


def _clamp(value: Fraction) -> float:
    return float(min(max(value, Fraction(0)), Fraction(1)))


def parse_fact_list(text: str, weighted: bool, max_facts: int) -> ParseOutcome[FactList]:
    """Parse numbered fact lines.

    Accepts ``N. fact`` (or ``N) fact``) lines, plus a trailing ``[w]`` salience when
    weighted. Facts are renumbered 1..n, truncated to max_facts and saliences
    clamped into [0, 1], each recovery adding a warning.

    Raises:
        EmptyFactListError: If no line parses as a fact
    """
    warnings: List[str] = []
    texts: List[str] = []
    weights: List[Optional[float]] = []
    skipped = 0
    clamped = 0
    missing_weight = 0

    for line in (text or "").splitlines():
        if not line.strip():
            continue
        match = _FACT_LINE.match(line)
        if not match:
            skipped += 1
            continue
        body = _LEADING_MARKERS.sub("", match.group(2)).strip()

        salience: Optional[float] = None
        if weighted:
            weight_match = _SALIENCE.match(body)
            if weight_match:
                body = weight_match.group(1).strip()
                raw = Fraction(weight_match.group(2))
                salience = _clamp(raw)
                if raw < 0 or raw > 1:
                    clamped += 1
            else:
                missing_weight += 1

        if not body:
            skipped += 1
            continue
        texts.append(body)
        weights.append(salience)

    if not texts:
        raise EmptyFactListError("No numbered fact line found in decomposition output")

    if skipped:
        warnings.append(f"skipped {skipped} line(s) that were not numbered facts")
    if clamped:
        warnings.append(f"clamped {clamped} salience value(s) into [0, 1]")
    if missing_weight:
        warnings.append(f"{missing_weight} fact(s) had no salience")
    if len(texts) > max_facts:
        warnings.append(f"truncated {len(texts) - max_facts} fact(s) beyond max_facts={max_facts}")
        texts = texts[:max_facts]
        weights = weights[:max_facts]

    facts = FactList(
        tuple(
            AtomicFact(index=i, text=body, salience=weight)
            for i, (body, weight) in enumerate(zip(texts, weights), start=1)
        )
    )
    return ParseOutcome(facts, warnings)


def parse_draft(text: str) -> ParseOutcome[Draft]:
    """Parse ``ANSWER:`` / ``RATIONALE:`` output.

    Without an ANSWER marker the whole trimmed text (or the part before a
    RATIONALE marker) becomes the answer, with a warning.

    Raises:
        EmptyDraftError: If the text is blank or the answer is empty
    """
    if not text or not text.strip():
        raise EmptyDraftError("Draft output is blank")

    warnings: List[str] = []
    lines = text.strip().splitlines()
    answer_at: Optional[int] = None
    rationale_at: Optional[int] = None
    for position, line in enumerate(lines):
        if answer_at is None and _ANSWER.match(line):
            answer_at = position
        elif rationale_at is None and _RATIONALE.match(line):
            rationale_at = position

    rationale = ""
    if rationale_at is not None:
        end = answer_at if answer_at is not None and answer_at > rationale_at else len(lines)
        first = _RATIONALE.match(lines[rationale_at]).group(1)
        rationale = "\n".join([first] + lines[rationale_at + 1 : end]).strip()
    else:
        warnings.append("missing RATIONALE marker")

    if answer_at is not None:
        end = rationale_at if rationale_at is not None and rationale_at > answer_at else len(lines)
        answer = _ANSWER.match(lines[answer_at]).group(1).strip()
        if not answer:
            # Answer written on the lines following a bare marker.
            answer = "\n".join(lines[answer_at + 1 : end]).strip()
    else:
        warnings.append("missing ANSWER marker")
        if rationale_at is None:
            answer = text.strip()
        else:
            answer = "\n".join(lines[:rationale_at]).strip()

    answer = answer.strip("*").strip()
    if not answer:
        raise EmptyDraftError("Draft output has no answer text")

    return ParseOutcome(Draft(answer=answer, rationale=rationale), warnings)


def _score_from(numerator: str, denominator: Optional[str]) -> Optional[Fraction]:
    value = Fraction(numerator)
    if denominator is None:
        return value
    divisor = Fraction(denominator)
    if divisor <= 0:
        return None
    return value / divisor


def parse_score(text: str) -> SupportAssessment:
    """Parse the scorer's support value.

    Reads the last ``SUPPORT:`` line, or a bare decimal / ``a/b`` fraction making
    up the whole output, and clamps it into [0, 1]. Unreadable output gives
    score 0.0 with parse_ok=False; the raw text is always preserved.
    """
    raw_text = text or ""
    candidate = None

    for line in reversed(raw_text.splitlines()):
        match = _SUPPORT.search(line)
        if match:
            value = _SCORE_VALUE.match(match.group(1).strip())
            if value:
                candidate = value
            break

    if candidate is None:
        candidate = _BARE_SCORE.match(raw_text)

    if candidate is None:
        logger.debug("Support output had no parsable score")
        return SupportAssessment.unparsed(raw_text)

    try:
        value = _score_from(candidate.group(1), candidate.group(2))
    except ValueError:
        # Digit strings beyond the interpreter's int conversion limit.
        value = None
    if value is None:
        return SupportAssessment.unparsed(raw_text)

    return SupportAssessment(score=_clamp(value), parse_ok=True, raw_text=raw_text)
