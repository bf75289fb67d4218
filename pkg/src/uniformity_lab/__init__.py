"""Desk-scale quadratic Fourier analysis on Z_N."""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
