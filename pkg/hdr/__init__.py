"""Hierarchical B-spline de Rham complexes: exactness checks, exact refinement and solvers."""

__version__ = "1.0.0"
