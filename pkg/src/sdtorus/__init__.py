"""Selfdual Einstein metrics with torus symmetry from hyperbolic eigenfunctions."""

__version__ = "0.1.0"
