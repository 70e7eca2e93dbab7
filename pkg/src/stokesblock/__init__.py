"""Finite-dimensional Stokes saddle-point operators and their spectral geometry."""

__version__ = "0.1.0"
