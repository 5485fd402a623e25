"""Simulator and analysis harness for low-tech boardroom voting."""

__version__ = "0.1.0"
