"""Generalized, non-homogeneous and fractional Skellam processes."""

__version__ = "0.1.0"
