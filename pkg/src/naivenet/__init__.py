"""Naive sequential social learning on observation networks."""

__version__ = "0.1.0"
