"""Leakage-distortion tradeoffs for two-agent interactive privacy mechanisms."""

__version__ = "0.1.0"
