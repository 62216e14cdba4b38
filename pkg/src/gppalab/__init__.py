"""Generalized proximal point algorithms: runs, rate formulas, and certificates."""

__version__ = "0.1.0"
