"""Hecke eigenvalue sums over quadratic progressions at desk scale."""

__version__ = "0.1.0"
