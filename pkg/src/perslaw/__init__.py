"""Persistence diagrams of random geometric complexes, linear representations and their stability."""

__version__ = "0.1.0"
