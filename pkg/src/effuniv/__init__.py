"""Constructive effective-universality toolkit for zeta and Dirichlet L-functions."""

from .assignment import PhaseAssignment
from .lfunc import LFunctionDescriptor, builtin_dirichlet, builtin_zeta

__all__ = ["LFunctionDescriptor", "PhaseAssignment", "builtin_dirichlet", "builtin_zeta"]
__version__ = "0.1.0"
