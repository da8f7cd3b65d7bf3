"""Minimum-path-cover guided symbolic execution over a miniature IR."""

__version__ = "0.1.0"
