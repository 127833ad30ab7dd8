"""Numerical laboratory for uniformly distributed measures on (H^n, d_H)."""

__version__ = "0.1.0"
