"""Shared fixtures for pave tests."""

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pytest

from pave.ai.retry_helpers import RetryPolicy
from pave.ai.scripted import ScriptedBackend
from pave.core.models import EvidenceContext, Question, TaskKind
from pave.data.dataset import ExampleRecord, PredictionRecord

FACTS_TEXT = "1. The Eiffel Tower is in Paris.\n2. It was completed in 1889."
DRAFT_TEXT = "ANSWER: Paris\nRATIONALE: Premise 1 places the tower in Paris."
REVISED_TEXT = "ANSWER: Paris, France\nRATIONALE: Premise 1 states the city."
WEIGHTED_FACTS_TEXT = "1. The Eiffel Tower is in Paris. [0.9]\n2. It was completed in 1889. [0.2]"


def make_record(
    record_id: str = "q1",
    task_kind: TaskKind = TaskKind.SPAN,
    gold: str = "Paris",
    question: str = "Where is the Eiffel Tower?",
    contexts: Sequence[str] = ("The Eiffel Tower is a landmark in Paris, completed in 1889.",),
) -> ExampleRecord:
    return ExampleRecord(
        id=record_id,
        task_kind=task_kind,
        question=question,
        contexts=tuple(contexts),
        gold=gold,
    )


def make_predictions(
    correct_flags: Sequence[bool],
    variant: str = "pave",
    ids: Optional[Sequence[str]] = None,
    answer_lengths: Optional[Sequence[int]] = None,
    gold_lengths: Optional[Sequence[int]] = None,
) -> List[PredictionRecord]:
    """Synthetic prediction log with the given correctness pattern."""
    count = len(correct_flags)
    ids = ids or [f"ex{i:04d}" for i in range(count)]
    answer_lengths = answer_lengths or [1] * count
    gold_lengths = gold_lengths or [1] * count
    return [
        PredictionRecord(
            id=ids[i],
            variant=variant,
            predicted="answer",
            correct=bool(correct_flags[i]),
            answer_token_len=answer_lengths[i],
            gold_token_len=gold_lengths[i],
        )
        for i in range(count)
    ]


def write_jsonl_rows(path: Path, rows: Sequence[Dict]) -> Path:
    path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
    return path


@pytest.fixture
def question():
    return Question(id="q1", text="Where is the Eiffel Tower?")


@pytest.fixture
def context():
    return EvidenceContext(("The Eiffel Tower is a landmark in Paris, completed in 1889.",))


@pytest.fixture
def record():
    return make_record()


@pytest.fixture
def fast_policy():
    """Retry policy that never waits long."""
    return RetryPolicy(max_attempts=3, base_backoff_ms=1)


@pytest.fixture
def keep_backend():
    """Scripted backend answering every stage on the keep path, indefinitely."""
    return ScriptedBackend(
        by_stage={
            "decompose": [FACTS_TEXT],
            "draft": [DRAFT_TEXT],
            "score": ["The premises state it directly.\nSUPPORT: 0.9"],
            "revise": [REVISED_TEXT],
        },
        repeat=True,
    )


@pytest.fixture
def dataset_file(tmp_path):
    """Three-record span dataset on disk."""
    rows = [make_record(record_id=f"q{i}").to_dict() for i in range(1, 4)]
    return write_jsonl_rows(tmp_path / "dataset.jsonl", rows)
