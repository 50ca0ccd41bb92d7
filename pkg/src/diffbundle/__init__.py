"""Finite-scale computations with smoothly numerable principal bundles."""

__version__ = "0.1.0"
