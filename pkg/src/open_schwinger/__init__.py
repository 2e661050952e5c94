"""Exact numerics for the lattice Schwinger model in a thermal medium."""

__version__ = "0.1.0"

from . import dilation, dynamics, environment, lattice, liouvillian  # noqa: F401
