"""Numerical CR geometry of the boundaries of classical symmetric domains."""
