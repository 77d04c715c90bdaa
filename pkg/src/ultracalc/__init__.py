"""Numerical pseudodifferential calculus of infinite order."""

__version__ = "0.1.0"
