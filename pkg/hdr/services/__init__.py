"""Algorithms over the spline models: exactness, admissibility, complexes, solvers, I/O."""
