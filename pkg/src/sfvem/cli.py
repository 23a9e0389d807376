"""Console entry point; the implementation lives with the harness."""

from .harness import cli, main

__all__ = ["cli", "main"]
