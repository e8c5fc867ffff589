"""Warm-atom cavity QED numerical laboratory."""

__version__ = "0.1.0"
