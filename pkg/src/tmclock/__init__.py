"""Polarizability, magic-wavelength, spin-relaxation and uncertainty-budget toolkit for the Tm 1.14 um clock transition."""

__version__ = "0.1.0"
