"""Answer judging and accuracy metrics.

Percentages are exact decimals: accuracies are presented with 2 decimals and
reductions with 1 decimal, both rounded half-up.
"""

import logging
import re
import statistics
import string
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from ..ai.retry_helpers import RetryPolicy, complete_with_retry
from ..ai.service import AIService
from ..core.exceptions import (
    AIServiceError,
    BackendExhaustedError,
    EmptyInputError,
    EvaluationError,
    UndefinedAtPerfectBaselineError,
)
from ..core.models import Stage
from ..data.dataset import PredictionRecord, normalize_label, whitespace_token_count
from ..prompts.renderers import PromptRenderer

logger = logging.getLogger(__name__)

JUDGE_MODES = ("normalized", "model_judge")
LENGTH_BUCKETS = ("1-2", "3-4", "5+")

_TWO_PLACES = Decimal("0.01")
_ONE_PLACE = Decimal("0.1")
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def round_half_up(value: Decimal, places: Decimal) -> Decimal:
    """Round a decimal half-up to the given quantum."""
    return value.quantize(places, rounding=ROUND_HALF_UP)


def percentage(part: int, whole: int, places: Decimal = _TWO_PLACES) -> Decimal:
    """100 * part / whole as a rounded decimal."""
    return round_half_up(Decimal(100) * Decimal(part) / Decimal(whole), places)


# ============================================================================
# Judges
# ============================================================================


def normalize_answer(text: str) -> str:
    """Lower text and remove punctuation, articles and extra whitespace."""
    text = text.lower()
    text = "".join(ch for ch in text if ch not in string.punctuation)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def judge_label3(predicted: str, gold: str) -> bool:
    """Exact agreement of normalized yes/no/maybe labels; invalid labels never match."""
    label = normalize_label(predicted)
    return label is not None and label == normalize_label(gold)


def judge_span(
    predicted: str,
    gold: str,
    alternatives: Sequence[str] = (),
    mode: str = "normalized",
    backend: Optional[AIService] = None,
    question: str = "",
    renderer: Optional[PromptRenderer] = None,
    retry_policy: Optional[RetryPolicy] = None,
) -> bool:
    """Judge a predicted span against the gold answer and its alternatives.

    Args:
        predicted: Predicted answer text
        gold: Gold answer
        alternatives: Additional acceptable answers
        mode: "normalized" (string match after normalization) or "model_judge"
        backend: Completion backend, required for model_judge
        question: Question text shown to the judge
        renderer: Prompt renderer for the judge prompt
        retry_policy: Backend retry policy

    Returns:
        bool: Whether the prediction counts as correct

    Raises:
        ValueError: Unknown mode, or model_judge without a backend
        BackendExhaustedError: The judge call kept failing (model_judge only)
    """
    if mode not in JUDGE_MODES:
        raise ValueError(f"Unknown judge mode: {mode}")

    references = [gold, *alternatives]
    if not predicted or not predicted.strip():
        return False

    if mode == "normalized":
        target = normalize_answer(predicted)
        return any(target == normalize_answer(reference) for reference in references)

    if backend is None:
        raise ValueError("model_judge mode requires a backend")
    renderer = renderer or PromptRenderer()
    request = renderer.render_judge(question, predicted, references)
    try:
        reply = complete_with_retry(backend, request, retry_policy).text
    except AIServiceError as e:
        raise BackendExhaustedError(
            f"judge call failed after retries: {e}", stage=Stage.JUDGE.value
        ) from e
    words = reply.split()
    return bool(words) and normalize_label(words[0]) == "yes"


# ============================================================================
# Accuracy
# ============================================================================


@dataclass(frozen=True)
class EvalResult:
    """Answer-level accuracy of one variant on one dataset."""

    variant: str
    n: int
    correct: int
    dataset: Optional[str] = None
    judge_mode: Optional[str] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be > 0")
        if not 0 <= self.correct <= self.n:
            raise ValueError("correct must be in range [0, n]")

    @property
    def accuracy_pct(self) -> Decimal:
        """100 * correct / n, 2 decimals half-up."""
        return percentage(self.correct, self.n)

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "variant": self.variant,
            "n": self.n,
            "correct": self.correct,
            "accuracy_pct": float(self.accuracy_pct),
        }
        if self.dataset is not None:
            data["dataset"] = self.dataset
        if self.judge_mode is not None:
            data["judge_mode"] = self.judge_mode
        return data


def accuracy(
    predictions: Iterable[PredictionRecord], dataset: Optional[str] = None
) -> EvalResult:
    """Share of correct predictions.

    Raises:
        EmptyInputError: If there are no predictions
        EvaluationError: If the predictions mix variants
    """
    predictions = list(predictions)
    if not predictions:
        raise EmptyInputError("accuracy needs at least one prediction")

    variants = {p.variant for p in predictions}
    if len(variants) > 1:
        raise EvaluationError(f"predictions mix variants: {sorted(variants)}")

    modes = {p.judge_mode for p in predictions if p.judge_mode is not None}
    return EvalResult(
        variant=predictions[0].variant,
        n=len(predictions),
        correct=sum(1 for p in predictions if p.correct),
        dataset=dataset,
        judge_mode=", ".join(sorted(modes)) if modes else None,
    )


def relative_error_reduction(baseline_acc_pct, new_acc_pct) -> Decimal:
    """Share of the baseline's errors removed, in percent with 1 decimal.

    Accepts Decimals, ints, floats or strings; floats are read through their
    shortest repr so 62.4 means exactly 62.4.

    Raises:
        UndefinedAtPerfectBaselineError: If the baseline accuracy is 100
    """
    baseline = Decimal(str(baseline_acc_pct))
    new = Decimal(str(new_acc_pct))
    if baseline >= 100:
        raise UndefinedAtPerfectBaselineError(
            "relative error reduction is undefined for a baseline at 100% accuracy"
        )
    return round_half_up(Decimal(100) * (new - baseline) / (Decimal(100) - baseline), _ONE_PLACE)


# ============================================================================
# Length diagnostics
# ============================================================================


def length_bucket(tokens: int) -> str:
    """Gold-length bucket for a token count."""
    if tokens <= 2:
        return "1-2"
    if tokens <= 4:
        return "3-4"
    return "5+"


@dataclass(frozen=True)
class LengthStats:
    """Answer length medians and accuracy by gold-answer length."""

    n: int
    median_pred_tokens: Decimal
    median_gold_tokens: Decimal
    bucket_accuracy: Dict[str, Decimal] = field(default_factory=dict)
    bucket_counts: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "median_pred_tokens": float(self.median_pred_tokens),
            "median_gold_tokens": float(self.median_gold_tokens),
            "bucket_accuracy": {k: float(v) for k, v in self.bucket_accuracy.items()},
            "bucket_counts": dict(self.bucket_counts),
        }


def _median(values: List[int]) -> Decimal:
    return Decimal(str(statistics.median(values)))


def length_diagnostics(
    predictions: Iterable[PredictionRecord], gold: Optional[Mapping[str, str]] = None
) -> LengthStats:
    """Median predicted/gold token lengths and accuracy per gold-length bucket.

    Args:
        predictions: Prediction records
        gold: Optional id -> gold text; when given, gold lengths are recounted
            from it instead of taken from the records

    Raises:
        EmptyInputError: If there are no predictions
    """
    predictions = list(predictions)
    if not predictions:
        raise EmptyInputError("length diagnostics need at least one prediction")

    pred_lengths = [p.answer_token_len for p in predictions]
    gold_lengths = [
        whitespace_token_count(gold[p.id])
        if gold is not None and p.id in gold
        else p.gold_token_len
        for p in predictions
    ]

    totals: Dict[str, int] = {}
    correct: Dict[str, int] = {}
    for prediction, tokens in zip(predictions, gold_lengths):
        bucket = length_bucket(tokens)
        totals[bucket] = totals.get(bucket, 0) + 1
        correct[bucket] = correct.get(bucket, 0) + int(prediction.correct)

    buckets = [b for b in LENGTH_BUCKETS if b in totals]
    return LengthStats(
        n=len(predictions),
        median_pred_tokens=_median(pred_lengths),
        median_gold_tokens=_median(gold_lengths),
        bucket_accuracy={b: percentage(correct[b], totals[b], _ONE_PLACE) for b in buckets},
        bucket_counts={b: totals[b] for b in buckets},
    )
