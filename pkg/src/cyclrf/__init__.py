"""Gaussian random fields with cyclical long-range dependence."""

__version__ = "0.1.0"
