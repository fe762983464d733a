"""Certified bounds for the uniform-metric pseudometric on fundamental groups."""

__version__ = "0.1.0"
