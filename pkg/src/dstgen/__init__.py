"""Synthetic dialogue-state-tracking data: generation, assembly, evaluation."""

__version__ = "0.1.0"
