"""CLI command implementations.

This module contains the core logic for CLI commands.
"""

import logging
import os
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence, Tuple

from ..ai.orchestrator import AIOrchestrator
from ..ai.retry_helpers import RetryPolicy
from ..ai.service import AIService
from ..core.config import CliConfig, load_config_file
from ..core.exceptions import ConfigurationError, EmptyInputError
from ..core.models import AuditTrace, FinalizationDecision, TaskKind
from ..data.converters import convert_pubmedqa, convert_squad
from ..data.dataset import (
    ExampleRecord,
    PredictionRecord,
    load_dataset,
    load_predictions,
    save_dataset,
    write_predictions,
)
from ..evaluation.metrics import accuracy, judge_label3, judge_span, length_diagnostics
from ..evaluation.paired import paired_transition
from ..evaluation.report import DEFAULT_DATASET, emit_report
from ..models.run_result import RunSummary
from ..pipeline.runner import TraceSink, load_traces, run_dataset
from ..prompts.manager import PromptLibrary
from ..prompts.renderers import PromptRenderer

logger = logging.getLogger(__name__)

API_KEY_ENV = "PAVE_API_KEY"


def build_config(config_path: Optional[Path], flag_values: Mapping[str, Any]) -> CliConfig:
    """Merge the config file and flags, then validate every field.

    Raises:
        ConfigurationError: On unknown keys or invalid values
    """
    file_values = load_config_file(config_path) if config_path else {}
    config = CliConfig.from_sources(file_values, flag_values)
    errors = config.validate()
    if errors:
        raise ConfigurationError("; ".join(errors))
    return config


def run_command(config: CliConfig, api_key: Optional[str] = None) -> RunSummary:
    """Run a dataset through the configured variant.

    Writes traces and the prediction log (and a report when configured).

    Args:
        config: Validated CLI configuration
        api_key: Live backend credential (default: $PAVE_API_KEY)

    Returns:
        RunSummary: Counts, failures, the merged configuration and prompt version

    Raises:
        ConfigurationError: Missing dataset, credential or invalid settings
        PaveError: Dataset, prompt or trace I/O failures
    """
    if not config.dataset:
        raise ConfigurationError("--dataset: required")
    dataset_path = Path(config.dataset)
    if not dataset_path.is_file():
        raise ConfigurationError(f"--dataset: file not found: {dataset_path}")

    pipeline_config = config.pipeline_config()
    if api_key is None:
        api_key = os.environ.get(API_KEY_ENV)
    try:
        backend_config = config.backend_config(api_key)
    except ValueError as e:
        raise ConfigurationError(str(e))

    library = PromptLibrary(library_path=Path(config.template_dir) if config.template_dir else None)
    records = load_dataset(dataset_path)

    orchestrator = AIOrchestrator(backend_config)
    backend = orchestrator.get_service()
    policy = orchestrator.retry_policy()
    renderer = PromptRenderer(
        library=library,
        temperature=pipeline_config.temperature,
        max_output_tokens=backend_config.max_output_tokens,
        seed=pipeline_config.seed,
    )

    with TraceSink(Path(config.traces)) as sink:
        summary = run_dataset(
            records,
            pipeline_config,
            backend,
            parallelism=config.parallelism,
            trace_sink=sink,
            renderer=renderer,
            retry_policy=policy,
        )
    summary.config = config.to_dict()
    summary.prompt_version = library.version

    predictions = judge_predictions(
        records, summary, config.judge_mode, backend=backend, renderer=renderer, retry_policy=policy
    )
    write_predictions(Path(config.predictions), predictions)
    logger.info(f"Wrote {len(predictions)} prediction(s) to {config.predictions}")

    if config.report and predictions:
        emit_report(
            [accuracy(predictions, dataset=dataset_path.stem)],
            path=Path(config.report),
            judge_mode=config.judge_mode,
        )
    return summary


def judge_predictions(
    records: Sequence[ExampleRecord],
    summary: RunSummary,
    judge_mode: str = "normalized",
    backend: Optional[AIService] = None,
    renderer: Optional[PromptRenderer] = None,
    retry_policy: Optional[RetryPolicy] = None,
) -> List[PredictionRecord]:
    """Judge every record's final answer; failed examples count as incorrect."""
    predictions = []
    for record in records:
        outcome = summary.outcomes.get(record.id)
        predicted = outcome.final.text if outcome is not None else ""
        if record.task_kind == TaskKind.LABEL3:
            correct = judge_label3(predicted, record.gold)
            mode = None
        else:
            correct = judge_span(
                predicted,
                record.gold,
                record.gold_alternatives,
                mode=judge_mode,
                backend=backend,
                question=record.question,
                renderer=renderer,
                retry_policy=retry_policy,
            )
            mode = judge_mode
        predictions.append(
            PredictionRecord.build(
                id=record.id,
                variant=summary.variant,
                predicted=predicted,
                gold=record.gold,
                correct=correct,
                judge_mode=mode,
            )
        )
    return predictions


def parse_log_argument(argument: str) -> Tuple[str, Path]:
    """Split ``[DATASET=]PATH`` into a dataset label and a path."""
    label, separator, path = argument.partition("=")
    if separator and label and path:
        return label, Path(path)
    return DEFAULT_DATASET, Path(argument)


def eval_command(logs: Sequence[str], report_path: Optional[Path] = None) -> str:
    """Accuracy report over one or more prediction logs.

    Args:
        logs: ``[DATASET=]PATH`` arguments; each log holds one variant
        report_path: Where to write the JSON report

    Returns:
        str: Plain-text table

    Raises:
        EmptyInputError: If a log is empty
        SchemaError: On a malformed log line
    """
    results = []
    modes = set()
    for argument in logs:
        dataset, path = parse_log_argument(argument)
        predictions = load_predictions(path)
        if not predictions:
            raise EmptyInputError(f"prediction log {path} is empty")
        result = accuracy(predictions, dataset=dataset)
        if result.judge_mode:
            modes.add(result.judge_mode)
        results.append(result)
    judge_mode = ", ".join(sorted(modes)) if modes else None
    return emit_report(results, path=report_path, judge_mode=judge_mode)


def compare_command(path_a: Path, path_b: Path, report_path: Optional[Path] = None) -> str:
    """Paired transition, error reduction and length diagnostics for two logs.

    Raises:
        IdMismatchError: If the logs cover different ids
        EmptyInputError: If the logs are empty
    """
    preds_a = load_predictions(path_a)
    preds_b = load_predictions(path_b)
    matrix = paired_transition(preds_a, preds_b)

    name_a = f"A ({matrix.variant_a})"
    name_b = f"B ({matrix.variant_b})"
    results = [accuracy(preds_a, dataset=name_a), accuracy(preds_b, dataset=name_b)]
    lengths = {name_a: length_diagnostics(preds_a), name_b: length_diagnostics(preds_b)}
    return emit_report(
        results,
        transitions={f"{matrix.variant_a} -> {matrix.variant_b}": matrix},
        lengths=lengths,
        path=report_path,
    )


def format_trace(trace: AuditTrace) -> str:
    """Human-readable rendering of one audit trace."""
    variant = trace.variant.value
    lines = [f"Question: {trace.question_id}", f"Variant:  {variant}", "", "Premises:"]
    if trace.facts.n:
        for fact in trace.facts:
            weight = f" (salience {fact.salience:.2f})" if fact.salience is not None else ""
            lines.append(f"  [{fact.index}] {fact.text}{weight}")
    else:
        lines.append(f"  (none, {variant} variant)")

    lines += ["", f"Draft:    {trace.draft.answer}"]
    if trace.draft.rationale:
        lines.append(f"Rationale: {trace.draft.rationale}")

    if trace.support is None:
        lines.append("Support:  (not scored)")
        lines.append("Gate:     (not applied)")
    else:
        parsed = "" if trace.support.parse_ok else " (unparseable, treated as 0)"
        lines.append(f"Support:  {trace.support.score:.2f}{parsed}")
        decision = trace.decision
        verb = "keep" if decision == FinalizationDecision.KEEP else "revise"
        comparison = ">=" if decision == FinalizationDecision.KEEP else "<"
        score, tau = trace.support.score, trace.tau_used
        lines.append(f"Gate:     {verb} ({score:.2f} {comparison} tau {tau:.2f})")

    revised = f" (revised {trace.final.revisions} time(s))" if trace.final.was_revised else ""
    lines += [
        f"Final:    {trace.final.text}{revised}",
        f"Calls:    {trace.final.backend_calls}",
        f"Time:     {trace.started_at.isoformat()} .. {trace.ended_at.isoformat()}",
    ]
    return "\n".join(lines)


def trace_show_command(traces_path: Path, question_id: str) -> str:
    """Render the trace for one question id.

    Raises:
        ConfigurationError: If no trace has that id
    """
    for trace in load_traces(traces_path):
        if trace.question_id == question_id:
            return format_trace(trace)
    raise ConfigurationError(f"No trace for question id '{question_id}' in {traces_path}")


def convert_command(
    kind: str, source: Path, output: Path, sample: Optional[int] = None, seed: int = 0
) -> int:
    """Convert a public QA release into dataset JSONL.

    Returns:
        int: Number of records written
    """
    converters = {"pubmedqa": convert_pubmedqa, "squad": convert_squad}
    records = converters[kind](source, sample=sample, seed=seed)
    save_dataset(output, records)
    return len(records)

