"""Translative and lattice packings of convex polytopes in the plane and in space."""

__version__ = "0.1.0"
