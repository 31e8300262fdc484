"""Utility modules for g2lab."""

from .tracing import tracing

__all__ = ['tracing']
