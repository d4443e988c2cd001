"""Numerical weak KAM / Aubry-Mather toolkit for time-periodic Hamiltonians on the circle."""

__version__ = "0.1.0"
