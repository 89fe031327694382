"""Exact normal-form reduction of G-invariant Landau potentials."""

__version__ = "0.1.0"
