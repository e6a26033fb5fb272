"""Spectra, frames and Weyl-type lattice counting for bounded domains."""

__version__ = "0.1.0"
