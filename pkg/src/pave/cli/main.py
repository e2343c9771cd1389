"""Command-line interface for pave.

This module provides the CLI commands for running the validation pipeline over
a dataset, evaluating and comparing prediction logs, inspecting audit traces
and converting public QA releases.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from .. import __version__
from ..core.config import DEFAULT_MAX_FACTS, DEFAULT_TAU
from ..core.exceptions import PaveError
from ..core.models import Variant


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s - %(name)s - %(message)s" if verbose else "%(message)s",
        stream=sys.stderr,
    )


def _fail(error: BaseException, verbose: bool) -> None:
    """Report an error on stderr and exit with the matching status."""
    if isinstance(error, KeyboardInterrupt):
        click.echo("\n\nOperation cancelled by user.", err=True)
        sys.exit(130)
    if isinstance(error, PaveError):
        click.echo(f"Error: {error}", err=True)
        sys.exit(1)
    click.echo(f"Unexpected error: {error}", err=True)
    if verbose:
        import traceback

        click.echo("\nTraceback:", err=True)
        click.echo(traceback.format_exc(), err=True)
    sys.exit(1)


@click.group()
@click.version_option(version=__version__, prog_name="pave")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging on stderr")
@click.pass_context
def cli(ctx, verbose: bool):
    """pave - premise-aware validation for retrieval-augmented QA.

    Decomposes retrieved context into atomic premises, drafts an answer, scores
    its support and revises it below a threshold, recording an audit trace.
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    _setup_logging(verbose)


@cli.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path),
    help="YAML config file; flags override its values",
)
@click.option("--dataset", help="Dataset JSONL path")
@click.option(
    "--variant",
    type=click.Choice([v.value for v in Variant]),
    help="Pipeline variant (default: pave)",
)
@click.option("--tau", type=float, help=f"Revision threshold in [0, 1] (default: {DEFAULT_TAU})")
@click.option("--max-facts", type=int, help=f"Maximum premises kept (default: {DEFAULT_MAX_FACTS})")
@click.option("--max-revisions", type=int, help="Revision rounds; >1 re-scores (default: 1)")
@click.option("--temperature", type=float, help="Decoding temperature (default: 0)")
@click.option("--seed", type=int, help="Decoding seed, where the endpoint supports it")
@click.option("--parallelism", type=int, help="Examples in flight (default: 1)")
@click.option("--backend", type=click.Choice(["live", "scripted"]), help="Backend (default: live)")
@click.option("--base-url", help="OpenAI-compatible endpoint base URL")
@click.option("--model", help="Model name (default: gpt-4o-mini)")
@click.option("--template-dir", help="Directory of stage templates overriding the built-in set")
@click.option("--traces", help="Trace JSONL output (default: traces.jsonl)")
@click.option("--predictions", help="Prediction log output (default: predictions.jsonl)")
@click.option("--report", help="Accuracy report JSON output")
@click.option(
    "--judge-mode",
    type=click.Choice(["normalized", "model_judge"]),
    help="Span judging protocol (default: normalized)",
)
@click.option("--script", help="YAML script for the scripted backend")
@click.option(
    "--store-prompts/--no-store-prompts",
    default=None,
    help="Store full rendered prompts in traces",
)
@click.option("--max-attempts", type=int, help="Backend attempts per call (default: 3)")
@click.option("--base-backoff-ms", type=int, help="First retry backoff in ms (default: 500)")
@click.option("--timeout-seconds", type=float, help="Per-request timeout (default: 60)")
@click.pass_context
def run(ctx, config_path: Optional[Path], **flags):
    """Run a dataset through one pipeline variant.

    Writes one trace per completed example and a prediction log for every
    example, then prints the run summary as JSON.
    """
    from .commands import build_config, run_command

    verbose = ctx.obj.get("verbose", False)
    try:
        config = build_config(config_path, flags)
        summary = run_command(config)
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, verbose)

    click.echo(json.dumps(summary.to_dict(), indent=2))


@cli.command(name="eval")
@click.argument("logs", nargs=-1, required=True)
@click.option("--report", "report_path", type=click.Path(path_type=Path), help="Report JSON output")
@click.pass_context
def eval_logs(ctx, logs, report_path: Optional[Path]):
    """Accuracy of one or more prediction logs.

    LOGS: Prediction log paths, optionally prefixed with a dataset label
    (DATASET=PATH) to lay results out as variants x datasets.
    """
    from .commands import eval_command

    try:
        table = eval_command(logs, report_path)
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, ctx.obj.get("verbose", False))

    click.echo(table)


@cli.command()
@click.argument("log_a", type=click.Path(path_type=Path))
@click.argument("log_b", type=click.Path(path_type=Path))
@click.option("--report", "report_path", type=click.Path(path_type=Path), help="Report JSON output")
@click.pass_context
def compare(ctx, log_a: Path, log_b: Path, report_path: Optional[Path]):
    """Paired comparison of two prediction logs over the same ids.

    LOG_A: Reference log (e.g. support_scoring)
    LOG_B: Compared log (e.g. pave)
    """
    from .commands import compare_command

    try:
        text = compare_command(log_a, log_b, report_path)
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, ctx.obj.get("verbose", False))

    click.echo(text)


@cli.group()
def trace():
    """Inspect audit traces."""


@trace.command(name="show")
@click.argument("question_id")
@click.option(
    "--traces",
    "traces_path",
    type=click.Path(path_type=Path),
    default=Path("traces.jsonl"),
    show_default=True,
    help="Trace JSONL file",
)
@click.pass_context
def trace_show(ctx, question_id: str, traces_path: Path):
    """Pretty-print the audit trace of one question.

    QUESTION_ID: Example id to show
    """
    from .commands import trace_show_command

    try:
        text = trace_show_command(traces_path, question_id)
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, ctx.obj.get("verbose", False))

    click.echo(text)


@cli.command()
@click.argument("kind", type=click.Choice(["pubmedqa", "squad"]))
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option(
    "-o",
    "--output",
    type=click.Path(path_type=Path),
    required=True,
    help="Dataset JSONL output",
)
@click.option("--sample", type=int, help="Seeded random subset size")
@click.option("--seed", type=int, default=0, show_default=True, help="Sampling seed")
@click.pass_context
def convert(ctx, kind: str, source: Path, output: Path, sample: Optional[int], seed: int):
    """Convert a public QA release into dataset JSONL.

    KIND: pubmedqa (ori_pqal.json) or squad (v1.1 JSON)
    SOURCE: Path to the release file
    """
    from .commands import convert_command

    try:
        count = convert_command(kind, source, output, sample=sample, seed=seed)
    except (Exception, KeyboardInterrupt) as e:
        _fail(e, ctx.obj.get("verbose", False))

    click.echo(f"Wrote {count} record(s) to {output}")


@cli.command()
def version():
    """Show version information."""
    click.echo(f"pave {__version__}")
    click.echo("Premise-aware validation for retrieval-augmented QA")


if __name__ == "__main__":
    cli()
