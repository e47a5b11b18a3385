"""Spectral laboratory for super-Liouville equations on the round 2-sphere."""

__version__ = "0.1.0"
