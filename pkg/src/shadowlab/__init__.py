"""Numerical shadowing experiments for continuous flows."""

__version__ = "0.1.0"
