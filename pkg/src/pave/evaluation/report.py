"""Evaluation report.

Writes a JSON document laid out as variants x datasets, with relative error
reduction against the baseline where one is present, plus any paired
transitions and length diagnostics, and renders the same table as aligned
plain text.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .metrics import EvalResult, LengthStats, relative_error_reduction
from .paired import TransitionMatrix
from ..core.exceptions import DatasetIOError, EmptyInputError, TraceSinkError, ValidationError
from ..core.models import Variant

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
DEFAULT_DATASET = "dataset"


def _ordered(values: List[str], preferred: Sequence[str]) -> List[str]:
    known = [v for v in preferred if v in values]
    return known + sorted(v for v in values if v not in known)


def _reductions(results: Sequence[EvalResult]) -> Dict[str, Dict[str, Optional[float]]]:
    """Relative error reduction of each variant against the baseline, per dataset."""
    baselines = {
        r.dataset or DEFAULT_DATASET: r for r in results if r.variant == Variant.BASELINE.value
    }
    reductions: Dict[str, Dict[str, Optional[float]]] = {}
    for result in results:
        dataset = result.dataset or DEFAULT_DATASET
        baseline = baselines.get(dataset)
        if baseline is None or result.variant == Variant.BASELINE.value:
            continue
        if baseline.correct == baseline.n:
            value = None
        else:
            value = float(relative_error_reduction(baseline.accuracy_pct, result.accuracy_pct))
        reductions.setdefault(dataset, {})[result.variant] = value
    return reductions


def render_table(results: Sequence[EvalResult]) -> str:
    """Aligned plain-text accuracy table, one row per variant."""
    variants = _ordered(list({r.variant for r in results}), [v.value for v in Variant])
    datasets = sorted({r.dataset or DEFAULT_DATASET for r in results})
    cells = {(r.variant, r.dataset or DEFAULT_DATASET): f"{r.accuracy_pct:.2f}" for r in results}

    header = ["variant", *datasets]
    rows = [[variant, *(cells.get((variant, d), "-") for d in datasets)] for variant in variants]
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(len(header))]

    def line(row: List[str]) -> str:
        first = row[0].ljust(widths[0])
        rest = [value.rjust(width) for value, width in zip(row[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    divider = "  ".join("-" * width for width in widths)
    return "\n".join([line(header), divider, *(line(row) for row in rows)])


def render_transition(matrix: TransitionMatrix) -> str:
    """Plain-text rendering of a transition matrix."""
    a = matrix.variant_a or "A"
    b = matrix.variant_b or "B"
    reduction = matrix.error_reduction_pct
    rows = [
        ("both correct", str(matrix.both_correct)),
        (f"corrected by {b}", str(matrix.b_only_correct)),
        (f"introduced by {b}", str(matrix.a_only_correct)),
        ("both wrong", str(matrix.both_wrong)),
        ("error reduction", "n/a" if reduction is None else f"{reduction}%"),
    ]
    width = max(len(label) for label, _ in rows) + 1
    lines = [f"{a} -> {b} over {matrix.n} paired example(s)"]
    lines.extend(f"  {(label + ':').ljust(width)} {value}" for label, value in rows)
    return "\n".join(lines)


def render_lengths(name: str, stats: LengthStats) -> str:
    """Plain-text rendering of length diagnostics."""
    lines = [
        f"{name}: median answer {stats.median_pred_tokens} token(s), "
        f"median gold {stats.median_gold_tokens} token(s)"
    ]
    for bucket, value in stats.bucket_accuracy.items():
        lines.append(f"  gold {bucket} tokens: {value} ({stats.bucket_counts[bucket]} example(s))")
    return "\n".join(lines)


def emit_report(
    results: Sequence[EvalResult],
    transitions: Optional[Mapping[str, TransitionMatrix]] = None,
    lengths: Optional[Mapping[str, LengthStats]] = None,
    path: Optional[Path] = None,
    judge_mode: Optional[str] = None,
) -> str:
    """Write the JSON report (when a path is given) and return the text rendering.

    Args:
        results: Accuracy results, any mix of variants and datasets
        transitions: Named paired comparisons
        lengths: Named length diagnostics
        path: Report file path
        judge_mode: Span judging protocol that produced the correctness labels

    Returns:
        str: Aligned plain-text rendering

    Raises:
        EmptyInputError: If there are no results and nothing else to report
        TraceSinkError: If the report cannot be written
    """
    transitions = dict(transitions or {})
    lengths = dict(lengths or {})
    if not results and not transitions and not lengths:
        raise EmptyInputError("nothing to report")

    document: Dict[str, Any] = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "judge_mode": judge_mode,
        "datasets": sorted({r.dataset or DEFAULT_DATASET for r in results}),
        "variants": _ordered(list({r.variant for r in results}), [v.value for v in Variant]),
        "results": [r.to_dict() for r in results],
        "error_reduction_vs_baseline": _reductions(results),
        "transitions": {name: m.to_dict() for name, m in transitions.items()},
        "lengths": {name: s.to_dict() for name, s in lengths.items()},
    }

    if path is not None:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
        except OSError as e:
            raise TraceSinkError(f"Cannot write report {path}: {e}")
        logger.info(f"Report written to {path}")

    sections: List[str] = []
    if results:
        sections.append(render_table(results))
        if judge_mode:
            sections.append(f"judge mode: {judge_mode}")
    sections.extend(render_transition(m) for m in transitions.values())
    sections.extend(render_lengths(name, s) for name, s in lengths.items())
    return "\n\n".join(sections)


def load_report(path: Path) -> Dict[str, Any]:
    """Read a report, rebuilding its accuracy entries as EvalResults.

    Raises:
        DatasetIOError: If the file cannot be read
        ValidationError: If it is not a report document
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetIOError(f"Cannot read {path}: {e}")
    except UnicodeDecodeError as e:
        raise DatasetIOError(f"{path} is not valid UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}")

    if not isinstance(document, dict) or document.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValidationError(f"{path} is not a version {REPORT_SCHEMA_VERSION} report")

    document["results"] = [
        EvalResult(
            variant=entry["variant"],
            n=entry["n"],
            correct=entry["correct"],
            dataset=entry.get("dataset"),
            judge_mode=entry.get("judge_mode"),
        )
        for entry in document.get("results", [])
    ]
    return document
