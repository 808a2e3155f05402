"""Finite-length ML error bounds and achievable rates for sparse superposition codes."""

__version__ = "0.1.0"
