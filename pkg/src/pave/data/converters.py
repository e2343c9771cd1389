"""Converters from public QA releases to the dataset JSONL schema.

Best-effort tools: they read the PubMedQA labelled file (``ori_pqal.json``)
and SQuAD v1.1 JSON, optionally draw a seeded random subset, and return
ExampleRecords ready for ``save_dataset``.
"""

import json
import logging
import random
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TypeVar

from .dataset import ExampleRecord, normalize_label
from ..core.exceptions import DatasetIOError, ValidationError
from ..core.models import TaskKind

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetIOError(f"Cannot read {path}: {e}")
    except UnicodeDecodeError as e:
        raise DatasetIOError(f"{path} is not valid UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}")


def sample_records(records: Sequence[T], sample: Optional[int], seed: int = 0) -> List[T]:
    """Seeded random subset that keeps the source order.

    Args:
        records: All converted records
        sample: Subset size; None (or >= len(records)) keeps everything
        seed: Random seed recorded alongside the subset

    Returns:
        List of records in their original relative order
    """
    if sample is None or sample >= len(records):
        return list(records)
    if sample < 1:
        raise ValueError("sample must be > 0")
    chosen = sorted(random.Random(seed).sample(range(len(records)), sample))
    return [records[position] for position in chosen]


def convert_pubmedqa(
    path: Path, sample: Optional[int] = None, seed: int = 0
) -> List[ExampleRecord]:
    """Convert the PubMedQA labelled file into label3 records.

    Each entry's abstract sections become the contexts and ``final_decision``
    the gold label. Entries with an unusable label or no context are skipped.
    """
    data = _read_json(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a mapping from PMID to entry")

    records: List[ExampleRecord] = []
    skipped = 0
    for pmid, entry in data.items():
        label = normalize_label(str(entry.get("final_decision", "")))
        contexts = [c for c in entry.get("CONTEXTS", []) if isinstance(c, str) and c.strip()]
        question = entry.get("QUESTION", "")
        if label is None or not contexts or not str(question).strip():
            skipped += 1
            continue
        records.append(
            ExampleRecord(
                id=str(pmid),
                task_kind=TaskKind.LABEL3,
                question=str(question),
                contexts=tuple(contexts),
                gold=label,
            )
        )

    if skipped:
        logger.warning(f"Skipped {skipped} PubMedQA entr(ies) without a usable label or context")
    subset = sample_records(records, sample, seed)
    logger.info(f"Converted {len(subset)} of {len(records)} PubMedQA record(s) (seed {seed})")
    return subset


def convert_squad(path: Path, sample: Optional[int] = None, seed: int = 0) -> List[ExampleRecord]:
    """Convert SQuAD v1.1 JSON into span records.

    The gold paragraph is the single context; the first answer is the gold span
    and the remaining distinct answers become alternatives.
    """
    data = _read_json(path)
    articles = data.get("data") if isinstance(data, dict) else None
    if not isinstance(articles, list):
        raise ValidationError(f"{path}: expected a top-level 'data' list")

    records: List[ExampleRecord] = []
    for article in articles:
        for paragraph in article.get("paragraphs", []):
            context = paragraph.get("context", "")
            if not context.strip():
                continue
            for qa in paragraph.get("qas", []):
                answers = _distinct_answers(qa.get("answers", []))
                if not answers or not str(qa.get("question", "")).strip():
                    continue
                records.append(
                    ExampleRecord(
                        id=str(qa["id"]),
                        task_kind=TaskKind.SPAN,
                        question=qa["question"],
                        contexts=(context,),
                        gold=answers[0],
                        gold_alternatives=tuple(answers[1:]),
                    )
                )

    subset = sample_records(records, sample, seed)
    logger.info(f"Converted {len(subset)} of {len(records)} SQuAD record(s) (seed {seed})")
    return subset


def _distinct_answers(answers: List[Dict[str, Any]]) -> List[str]:
    seen: List[str] = []
    for answer in answers:
        text = str(answer.get("text", "")).strip()
        if text and text not in seen:
            seen.append(text)
    return seen
