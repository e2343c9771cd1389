"""Dataset runs.

Runs every record of a dataset through one pipeline variant, with up to
``parallelism`` examples in flight, appending each trace to a JSONL sink as
soon as its example completes. Per-example failures are tallied; a sink
write failure aborts the run.
"""

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence

from .variants import ValidationPipeline
from ..ai.retry_helpers import RetryPolicy
from ..ai.service import AIService
from ..core.config import PipelineConfig
from ..core.exceptions import DatasetIOError, PipelineError, SchemaError, TraceSinkError
from ..core.models import AuditTrace
from ..data.dataset import ExampleRecord
from ..models.run_result import ExampleFailure, RunOutcome, RunSummary
from ..prompts.renderers import PromptRenderer

logger = logging.getLogger(__name__)


class TraceSink:
    """Append-only JSONL trace file; one whole line per record."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> "TraceSink":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(self.path, "w", encoding="utf-8", newline="\n")
        except OSError as e:
            raise TraceSinkError(f"Cannot open trace file {self.path}: {e}")
        return self

    def __exit__(self, *exc_info) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def append(self, trace: AuditTrace) -> None:
        """Write one trace and flush it."""
        line = json.dumps(trace.to_dict(), ensure_ascii=False) + "\n"
        with self._lock:
            if self._handle is None:
                raise TraceSinkError(f"Trace file {self.path} is not open")
            try:
                self._handle.write(line)
                self._handle.flush()
            except OSError as e:
                raise TraceSinkError(f"Cannot write trace to {self.path}: {e}")


def run_dataset(
    records: Sequence[ExampleRecord],
    config: PipelineConfig,
    backend: AIService,
    parallelism: int = 1,
    trace_sink: Optional[TraceSink] = None,
    renderer: Optional[PromptRenderer] = None,
    retry_policy: Optional[RetryPolicy] = None,
) -> RunSummary:
    """Run every record through the configured variant.

    Args:
        records: Dataset records
        config: Pipeline settings
        backend: Completion backend shared by all examples
        parallelism: Maximum examples in flight
        trace_sink: Open sink receiving each completed trace (optional)
        renderer: Prompt renderer (optional)
        retry_policy: Backend retry policy (optional)

    Returns:
        RunSummary: Counts, failures and per-example outcomes

    Raises:
        ValueError: If parallelism < 1
        TraceSinkError: If a trace cannot be written
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    pipeline = ValidationPipeline(config, backend, renderer=renderer, retry_policy=retry_policy)
    summary = RunSummary(variant=config.variant.value)
    counts_lock = threading.Lock()
    calls_before = backend.call_count

    def record_outcome(record: ExampleRecord, outcome: RunOutcome) -> None:
        if trace_sink is not None:
            trace_sink.append(outcome.trace)
        with counts_lock:
            summary.completed += 1
            summary.revised += int(outcome.final.was_revised)
            summary.total_backend_calls += outcome.final.backend_calls
            summary.retry_calls += outcome.retry_calls
            summary.outcomes[record.id] = outcome

    def record_failure(record: ExampleRecord, error: PipelineError) -> None:
        logger.error(f"[{record.id}] failed at {error.stage}: {error}")
        with counts_lock:
            summary.failed += 1
            summary.failures.append(
                ExampleFailure(
                    id=record.id,
                    stage=error.stage,
                    error=type(error).__name__,
                    message=str(error),
                )
            )

    logger.info(
        f"Running {len(records)} example(s) with variant {config.variant.value}, "
        f"parallelism {parallelism}"
    )

    if parallelism == 1:
        for record in records:
            try:
                outcome = pipeline.run(record)
            except PipelineError as e:
                record_failure(record, e)
                continue
            record_outcome(record, outcome)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            futures = {executor.submit(pipeline.run, record): record for record in records}
            try:
                for future in as_completed(futures):
                    record = futures[future]
                    try:
                        outcome = future.result()
                    except PipelineError as e:
                        record_failure(record, e)
                        continue
                    record_outcome(record, outcome)
            except BaseException:
                executor.shutdown(wait=True, cancel_futures=True)
                raise

    # Failures are listed in input order regardless of completion order.
    order = {record.id: position for position, record in enumerate(records)}
    summary.failures.sort(key=lambda failure: order[failure.id])
    summary.backend_call_count = backend.call_count - calls_before

    logger.info(
        f"Run finished: {summary.completed} completed, {summary.failed} failed, "
        f"{summary.revised} revised, {summary.total_backend_calls} stage call(s)"
    )
    return summary


def save_traces(path: Path, traces: Iterable[AuditTrace]) -> None:
    """Write traces to a JSONL file."""
    with TraceSink(path) as sink:
        for trace in traces:
            sink.append(trace)


def load_traces(path: Path) -> List[AuditTrace]:
    """Read a JSONL trace file.

    Raises:
        DatasetIOError: If the file cannot be read
        SchemaError: If a line is not a valid trace
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetIOError(f"Cannot read {path}: {e}")
    except UnicodeDecodeError as e:
        raise DatasetIOError(f"{path} is not valid UTF-8: {e}")

    traces: List[AuditTrace] = []
    for number, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            traces.append(AuditTrace.from_dict(json.loads(line)))
        except json.JSONDecodeError as e:
            raise SchemaError(number, "<json>", str(e))
        except KeyError as e:
            raise SchemaError(number, str(e.args[0]), "missing")
        except (TypeError, ValueError) as e:
            raise SchemaError(number, "<trace>", str(e))
    return traces
