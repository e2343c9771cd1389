"""Paired outcome comparison of two prediction logs over the same examples."""

import logging
from dataclasses import dataclass
from decimal import Decimal
from typing import Dict, Iterable, Optional

from .metrics import percentage
from ..core.exceptions import EmptyInputError, EvaluationError, IdMismatchError
from ..data.dataset import PredictionRecord

logger = logging.getLogger(__name__)

_ONE_PLACE = Decimal("0.1")


@dataclass(frozen=True)
class TransitionMatrix:
    """Per-example correctness transitions from system A to system B."""

    both_correct: int
    a_only_correct: int  # Errors B introduced
    b_only_correct: int  # Errors B corrected
    both_wrong: int
    variant_a: Optional[str] = None
    variant_b: Optional[str] = None

    @property
    def n(self) -> int:
        """Number of paired examples."""
        return self.both_correct + self.a_only_correct + self.b_only_correct + self.both_wrong

    @property
    def errors_a(self) -> int:
        return self.b_only_correct + self.both_wrong

    @property
    def errors_b(self) -> int:
        return self.a_only_correct + self.both_wrong

    @property
    def error_reduction_pct(self) -> Optional[Decimal]:
        """100 * (errors_a - errors_b) / errors_a, 1 decimal; None when A made no errors."""
        if self.errors_a == 0:
            return None
        return percentage(self.errors_a - self.errors_b, self.errors_a, _ONE_PLACE)

    def to_dict(self) -> Dict[str, object]:
        reduction = self.error_reduction_pct
        return {
            "variant_a": self.variant_a,
            "variant_b": self.variant_b,
            "n": self.n,
            "both_correct": self.both_correct,
            "a_only_correct": self.a_only_correct,
            "b_only_correct": self.b_only_correct,
            "both_wrong": self.both_wrong,
            "error_reduction_pct": None if reduction is None else float(reduction),
        }


def _by_id(predictions: Iterable[PredictionRecord], label: str) -> Dict[str, PredictionRecord]:
    records: Dict[str, PredictionRecord] = {}
    for prediction in predictions:
        if prediction.id in records:
            raise EvaluationError(f"log {label} contains id {prediction.id!r} more than once")
        records[prediction.id] = prediction
    return records


def paired_transition(
    preds_a: Iterable[PredictionRecord], preds_b: Iterable[PredictionRecord]
) -> TransitionMatrix:
    """Count correctness transitions between two logs.

    Args:
        preds_a: Reference system's predictions
        preds_b: Compared system's predictions

    Returns:
        TransitionMatrix: Cell counts over the shared ids

    Raises:
        IdMismatchError: If the logs cover different ids
        EmptyInputError: If both logs are empty
    """
    a = _by_id(preds_a, "A")
    b = _by_id(preds_b, "B")

    mismatch = set(a) ^ set(b)
    if mismatch:
        raise IdMismatchError(mismatch)
    if not a:
        raise EmptyInputError("paired comparison needs at least one example")

    cells = {"both_correct": 0, "a_only_correct": 0, "b_only_correct": 0, "both_wrong": 0}
    for example_id, prediction_a in a.items():
        correct_a = prediction_a.correct
        correct_b = b[example_id].correct
        if correct_a and correct_b:
            cells["both_correct"] += 1
        elif correct_a:
            cells["a_only_correct"] += 1
        elif correct_b:
            cells["b_only_correct"] += 1
        else:
            cells["both_wrong"] += 1

    first_a = next(iter(a.values()))
    first_b = next(iter(b.values()))
    matrix = TransitionMatrix(variant_a=first_a.variant, variant_b=first_b.variant, **cells)
    logger.debug(f"Paired transition over {matrix.n} example(s): {cells}")
    return matrix
