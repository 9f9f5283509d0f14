"""Numerical laboratory for p-Dirichlet boundary regularity experiments."""

__version__ = "0.1.0"
