"""Command-line interface for pave."""

from .main import cli

__all__ = ["cli"]
