"""Pseudospectral laboratory for the Novikov equation and its Camassa-Holm relatives."""

__version__ = "0.1.0"
