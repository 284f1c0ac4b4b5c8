"""Semicircle law and moment CLT for spectral measures of Wigner matrices."""

__version__ = "0.1.0"
