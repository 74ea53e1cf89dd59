"""Lie point-symmetry analysis of nonlinear wave equations on Minkowski space."""
__version__ = "0.1.0"
