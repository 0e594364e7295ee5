"""
Centralized enums for repeated string values used across the package.

Document fields, CLI flags and report payloads reference these enums instead
of literal strings. Use .value when a plain string is required (JSON, CSV).
"""

from enum import Enum


# -----------------------------------------------------------------------------
# Spline spaces
# -----------------------------------------------------------------------------


class BoundaryMode(str, Enum):
    """
    Boundary-knot convention of a knot vector.

    HOMOGENEOUS repeats the first/last knot p times (0-forms vanish on the
    boundary); OPEN repeats them p+1 times (no boundary condition).
    """

    HOMOGENEOUS = "homogeneous"
    OPEN = "open"


class BasisVariant(str, Enum):
    """Hierarchical basis flavour: plain hierarchical or truncated."""

    HB = "hb"
    THB = "thb"


# -----------------------------------------------------------------------------
# Linear algebra
# -----------------------------------------------------------------------------


class ScalarMode(str, Enum):
    """Arithmetic used by SparseMatrix and rank computations."""

    RATIONAL = "rational"
    FLOAT = "float"


# -----------------------------------------------------------------------------
# Exactness checks
# -----------------------------------------------------------------------------


class ResolvedRule(str, Enum):
    """
    How pair seeding treats resolved functions.

    ANY_DIRECTION skips a function resolved in at least one direction;
    BOTH_DIRECTIONS skips it only when resolved in both.
    """

    ANY_DIRECTION = "any_direction"
    BOTH_DIRECTIONS = "both_directions"


# -----------------------------------------------------------------------------
# CLI / API drivers
# -----------------------------------------------------------------------------


class CheckKind(str, Enum):
    """Report selected by `hdr check --what`."""

    PAIRS = "pairs"
    COHOMOLOGY = "cohomology"
    ADMISSIBILITY = "admissibility"
    ASSUMPTION1 = "assumption1"


class ProblemKind(str, Enum):
    """Experiment selected by `hdr solve --problem`."""

    LAPLACE = "laplace"
    MAXWELL = "maxwell"


class ExitCode(int, Enum):
    """Process exit codes of the CLI."""

    CLEAN = 0
    FINDING = 1
    USAGE = 2


# -----------------------------------------------------------------------------
# API response message
# -----------------------------------------------------------------------------


class ApiResponseMessage(str, Enum):
    """Default message for successful API responses."""

    SUCCESS = "success"
