"""Coherence-resolved thermodynamics of finite-dimensional Lindblad dynamics."""

__version__ = "0.1.0"
