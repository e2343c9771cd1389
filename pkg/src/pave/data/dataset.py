"""
Evidence-grounded QA records and prediction logs.

Records carry their retrieved contexts inline, so a run never needs a
retriever. Both datasets and prediction logs are JSONL files; loading is
all-or-nothing and reports the first malformed line.
"""

import json
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from ..core.exceptions import DatasetIOError, SchemaError, TraceSinkError
from ..core.models import EvidenceContext, Question, TaskKind

logger = logging.getLogger(__name__)

LABELS = ("yes", "no", "maybe")
_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_label(text: Optional[str]) -> Optional[str]:
    """Map a free-text label onto yes/no/maybe.

    Lowercases, strips surrounding punctuation and whitespace, then requires an
    exact match.

    Returns:
        "yes", "no" or "maybe"; None when the text is not a valid label
    """
    if text is None:
        return None
    label = text.strip().lower().strip(_STRIP_CHARS)
    return label if label in LABELS else None


def whitespace_token_count(text: Optional[str]) -> int:
    """Number of maximal non-whitespace runs in the text."""
    return len((text or "").split())


@dataclass(frozen=True)
class ExampleRecord:
    """One QA instance with its fixed retrieved contexts."""

    id: str
    task_kind: TaskKind
    question: str
    contexts: Tuple[str, ...]
    gold: str
    gold_alternatives: Tuple[str, ...] = ()

    def __post_init__(self):
        """Validate and normalize the record."""
        if isinstance(self.task_kind, str):
            object.__setattr__(self, "task_kind", TaskKind(self.task_kind))
        object.__setattr__(self, "contexts", tuple(self.contexts))
        object.__setattr__(self, "gold_alternatives", tuple(self.gold_alternatives))

        if not self.id:
            raise ValueError("id must not be empty")
        if not self.question or not self.question.strip():
            raise ValueError("question must not be empty")
        if not self.contexts or any(not c or not c.strip() for c in self.contexts):
            raise ValueError("contexts must be a non-empty list of non-empty strings")

        if self.task_kind == TaskKind.LABEL3:
            label = normalize_label(self.gold)
            if label is None:
                raise ValueError(f"label3 gold must be yes, no or maybe, got {self.gold!r}")
            object.__setattr__(self, "gold", label)
        elif not self.gold or not self.gold.strip():
            raise ValueError("gold must not be empty")

    @property
    def question_value(self) -> Question:
        """Question view of this record."""
        return Question(id=self.id, text=self.question)

    @property
    def context(self) -> EvidenceContext:
        """Evidence view of this record."""
        return EvidenceContext(self.contexts)

    @property
    def golds(self) -> List[str]:
        """Gold answer followed by any alternatives."""
        return [self.gold, *self.gold_alternatives]

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the dataset JSONL schema."""
        data: Dict[str, Any] = {
            "id": self.id,
            "task_kind": self.task_kind.value,
            "question": self.question,
            "contexts": list(self.contexts),
            "gold": self.gold,
        }
        if self.gold_alternatives:
            data["gold_alternatives"] = list(self.gold_alternatives)
        return data


@dataclass(frozen=True)
class PredictionRecord:
    """Judged prediction for one example and variant."""

    id: str
    variant: str
    predicted: str
    correct: bool
    answer_token_len: int
    gold_token_len: int
    judge_mode: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.answer_token_len < 0 or self.gold_token_len < 0:
            raise ValueError("token lengths must be >= 0")

    @classmethod
    def build(
        cls,
        id: str,
        variant: str,
        predicted: str,
        gold: str,
        correct: bool,
        judge_mode: Optional[str] = None,
    ) -> "PredictionRecord":
        """Create a record with whitespace token lengths filled in."""
        return cls(
            id=id,
            variant=variant,
            predicted=predicted,
            correct=correct,
            answer_token_len=whitespace_token_count(predicted),
            gold_token_len=whitespace_token_count(gold),
            judge_mode=judge_mode,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the prediction log JSONL schema."""
        data: Dict[str, Any] = {
            "id": self.id,
            "variant": self.variant,
            "predicted": self.predicted,
            "correct": self.correct,
            "answer_token_len": self.answer_token_len,
            "gold_token_len": self.gold_token_len,
        }
        if self.judge_mode is not None:
            data["judge_mode"] = self.judge_mode
        return data


# ============================================================================
# JSONL loading
# ============================================================================


def _read_json_lines(path: Path) -> Iterable[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, object) for every non-blank line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot read {path}: {e}")
    except UnicodeDecodeError as e:
        raise DatasetIOError(f"{path} is not valid UTF-8: {e}")

    for number, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(number, "<json>", str(e))
        if not isinstance(data, dict):
            raise SchemaError(number, "<json>", "line is not a JSON object")
        yield number, data


def _require(data: Dict[str, Any], line: int, name: str, kind: type) -> Any:
    if name not in data:
        raise SchemaError(line, name, "missing")
    value = data[name]
    if kind is int and isinstance(value, bool):
        raise SchemaError(line, name, "expected integer")
    if not isinstance(value, kind):
        raise SchemaError(line, name, f"expected {kind.__name__}")
    return value


def _string_list(data: Dict[str, Any], line: int, name: str, required: bool) -> List[str]:
    if name not in data or data[name] is None:
        if required:
            raise SchemaError(line, name, "missing")
        return []
    value = data[name]
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise SchemaError(line, name, "expected list of strings")
    return value


def load_dataset(path: Path) -> List[ExampleRecord]:
    """Load dataset JSONL into records.

    Args:
        path: Path to a JSONL file with fields id, task_kind, question,
            contexts, gold and optional gold_alternatives

    Returns:
        List[ExampleRecord]: Records in file order

    Raises:
        DatasetIOError: If the file cannot be read
        SchemaError: On the first malformed line (the whole file is rejected)
    """
    records: List[ExampleRecord] = []
    seen = set()
    for line, data in _read_json_lines(path):
        record_id = _require(data, line, "id", str)
        task_kind = _require(data, line, "task_kind", str)
        if task_kind not in {kind.value for kind in TaskKind}:
            raise SchemaError(line, "task_kind", f"unknown task kind {task_kind!r}")
        question = _require(data, line, "question", str)
        contexts = _string_list(data, line, "contexts", required=True)
        gold = _require(data, line, "gold", str)
        alternatives = _string_list(data, line, "gold_alternatives", required=False)

        if not record_id:
            raise SchemaError(line, "id", "empty")
        if record_id in seen:
            raise SchemaError(line, "id", f"duplicate id {record_id!r}")
        seen.add(record_id)
        if not question.strip():
            raise SchemaError(line, "question", "empty")
        if not contexts or any(not context.strip() for context in contexts):
            raise SchemaError(line, "contexts", "expected at least one non-empty passage")
        if task_kind == TaskKind.LABEL3.value and normalize_label(gold) is None:
            raise SchemaError(line, "gold", f"label3 gold must be yes, no or maybe, got {gold!r}")
        if not gold.strip():
            raise SchemaError(line, "gold", "empty")

        records.append(
            ExampleRecord(
                id=record_id,
                task_kind=TaskKind(task_kind),
                question=question,
                contexts=tuple(contexts),
                gold=gold,
                gold_alternatives=tuple(alternatives),
            )
        )

    logger.info(f"Loaded {len(records)} record(s) from {path}")
    return records


def load_predictions(path: Path) -> List[PredictionRecord]:
    """Load a prediction log.

    Raises:
        DatasetIOError: If the file cannot be read
        SchemaError: On the first malformed line
    """
    predictions: List[PredictionRecord] = []
    for line, data in _read_json_lines(path):
        for name in ("answer_token_len", "gold_token_len"):
            if _require(data, line, name, int) < 0:
                raise SchemaError(line, name, "must be >= 0")
        predictions.append(
            PredictionRecord(
                id=_require(data, line, "id", str),
                variant=_require(data, line, "variant", str),
                predicted=_require(data, line, "predicted", str),
                correct=_require(data, line, "correct", bool),
                answer_token_len=_require(data, line, "answer_token_len", int),
                gold_token_len=_require(data, line, "gold_token_len", int),
                judge_mode=data.get("judge_mode"),
            )
        )
    return predictions


def write_jsonl(path: Path, rows: Iterable[Dict[str, Any]]) -> None:
    """Write dictionaries as UTF-8 JSONL with LF line endings."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            for row in rows:
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    except OSError as e:
        raise TraceSinkError(f"Cannot write {path}: {e}")


def save_dataset(path: Path, records: Iterable[ExampleRecord]) -> None:
    """Write records in the dataset JSONL schema."""
    write_jsonl(path, (record.to_dict() for record in records))


def write_predictions(path: Path, predictions: Iterable[PredictionRecord]) -> None:
    """Write a prediction log."""
    write_jsonl(path, (prediction.to_dict() for prediction in predictions))
