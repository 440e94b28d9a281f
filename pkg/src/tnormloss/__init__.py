"""Compile first-order logic knowledge bases into generator-driven losses."""

__version__ = "0.1.0"
