"""Entropy-constrained soft actor-critic: library, tabular verifier and CLI."""

__version__ = "0.1.0"
