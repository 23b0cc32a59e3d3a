"""Nonoverlapping block bootstrap for means and U-statistics of dependent data."""

__version__ = "0.1.0"
