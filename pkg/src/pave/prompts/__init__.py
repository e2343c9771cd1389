"""Stage prompt templates, rendering and output parsing."""
