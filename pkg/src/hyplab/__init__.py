"""Coarse-geometry laboratory for the torus mapping class group."""

__version__ = "0.1.0"
