"""Validation pipeline variants and the dataset runner."""

from .runner import load_traces, run_dataset, save_traces
from .variants import ValidationPipeline

__all__ = ["ValidationPipeline", "run_dataset", "save_traces", "load_traces"]
