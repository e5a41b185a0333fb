"""Desk-scale benchmark for zero-shot sim-to-sim dynamics transfer."""

__version__ = "0.1.0"
