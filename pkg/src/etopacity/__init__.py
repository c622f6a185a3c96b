"""Execution-time opacity analysis for parametric timed automata."""

__version__ = "0.1.0"
