# isostokes/__init__.py
"""Isomonodromy flow, Stokes matrices and the zone connection problem."""

__version__ = "1.0.0"
