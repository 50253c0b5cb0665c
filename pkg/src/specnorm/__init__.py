"""Norms of spectral projections for complex-scaled orthogonal polynomial families."""

__version__ = "0.1.0"
