"""Finite element solver for the Poisson problem on smooth curved domains
using straight-edged tetrahedra with boundary-shifted trial functions."""

__version__ = "0.1.0"
