"""Energy measures, edge densities and maximum locations for harmonic functions
on the N-dimensional Sierpinski gasket."""

from .address import DyadicPoint, EdgeAddress, SymbolStream, Word
from .harmonic import HarmonicContext, build_context

__all__ = ["DyadicPoint", "EdgeAddress", "HarmonicContext", "SymbolStream", "Word", "build_context"]
