"""Numerical toolkit for the fermionic signature operator of two-dimensional space-times."""

__version__ = "0.1.0"
