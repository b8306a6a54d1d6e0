"""Numerical lab for the nonlinear Neumann integral equation on the half-space."""

__version__ = "0.1.0"
