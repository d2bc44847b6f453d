"""Prompted PATE: private label aggregation over visual-prompt re-teachers."""

__version__ = "0.1.0"
