"""Berezin-Toeplitz quantization on products of 2-spheres.

Toeplitz matrices of polynomial and spin-system symbols, exact
diagonalization at desk scale, and numerical checks of eigenfunction
localization, weighted estimates, kernel decay and free-energy bounds.
"""
__version__ = "0.1.0"
