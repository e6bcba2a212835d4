"""Spectral mode engineering for counter-propagating quantum frequency conversion."""

__version__ = "0.1.0"
