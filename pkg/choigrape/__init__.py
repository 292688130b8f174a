"""Choi-matrix GRAPE optimal control for open quantum systems."""

__version__ = "0.3.0"
