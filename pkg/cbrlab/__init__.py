# cbrlab/__init__.py
"""Decoherence of macroscopic bodies coupled to the cosmic background radiation."""

__version__ = "0.1.0"
