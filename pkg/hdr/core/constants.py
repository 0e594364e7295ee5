"""
Package constants.

Tolerances that users may want to tune live in Settings (config.py); the
values here are fixed by the file formats and the discrete complex.
"""

import math

# --- Mesh documents ---

SCHEMA_VERSION: int = 1

# --- Form patterns of the 2D complex ---

# X⁰ = B^(0,0), X¹ = B^(1,0) × B^(0,1) (block order fixed), X² = B^(1,1)
ZERO_FORM: tuple[int, int] = (0, 0)
ONE_FORM_PATTERNS: tuple[tuple[int, int], tuple[int, int]] = ((1, 0), (0, 1))
TWO_FORM: tuple[int, int] = (1, 1)
FORM_PATTERNS: dict[int, tuple[tuple[int, int], ...]] = {
    0: (ZERO_FORM,),
    1: ONE_FORM_PATTERNS,
    2: (TWO_FORM,),
}

# --- Solver defaults ---

# Side length of the Maxwell test domain [0, π]²
MAXWELL_SIDE: float = math.pi
UNIT_SIDE: float = 1.0

# Distance from every m²+n² beyond which a nonzero eigenvalue is reported as spurious
SPURIOUS_EIGENVALUE_TOLERANCE: float = 0.1

# Residual guard of the least-squares grad-image projection (float mode)
COMPLEX_RESIDUAL_TOLERANCE: float = 1e-10

# --- Cohomology of the exact complex on the unit square ---

# (h0, h1, h2) keyed by BoundaryMode value
EXPECTED_BETTI: dict[str, tuple[int, int, int]] = {
    "homogeneous": (0, 0, 1),
    "open": (1, 0, 0),
}
