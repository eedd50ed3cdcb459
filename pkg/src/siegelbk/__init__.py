"""Numerical companion for Bergman kernels of Siegel cusp forms in degree one and two."""

__version__ = "0.1.0"
