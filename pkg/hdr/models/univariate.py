"""
Knot vectors and the univariate spline spaces S⁰ / S¹.

S⁰(Ξ) holds degree-p B-splines, S¹(Ξ) degree p−1 B-splines, connected by
d/dξ. Knots are exact Fractions on [0, 1]; all combinatorial decisions use
exact comparison. Public basis indices are 1-based.

Homogeneous mode repeats the end knots p times, so the degree-p basis on Ξ
has no function that is nonzero at 0 or 1 (m functions) while the degree
p−1 basis on the same Ξ is open (m+1 functions). Open mode repeats them
p+1 times; S¹ then lives on Ξ with its first and last knot dropped.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from hdr.core.enums import BoundaryMode, ScalarMode
from hdr.core.linalg import SparseMatrix

KnotLike = Union[Fraction, int, str]


class KnotVectorError(ValueError):
    """Raised when a knot sequence breaks the boundary or multiplicity rules."""

    def __init__(self, message: str, knots: Optional[Sequence[Fraction]] = None):
        super().__init__(message)
        self.knots = tuple(knots or ())


class BasisIndexError(IndexError):
    """Raised for a basis index outside 1..dimension."""

    def __init__(self, index: int, dimension: int):
        super().__init__(f"basis index {index} outside 1..{dimension}")
        self.index = index
        self.dimension = dimension


class NotNestedError(ValueError):
    """Raised when a 'fine' space is not a refinement of the 'coarse' one."""


def _boundary_repeats(degree: int, mode: BoundaryMode) -> int:
    return degree if mode is BoundaryMode.HOMOGENEOUS else degree + 1


@dataclass(frozen=True)
class Breakpoints:
    """Distinct knot values ζ₁ < … < ζ_{z+1} and the open intervals between them."""

    zeta: tuple[Fraction, ...]

    @property
    def num_intervals(self) -> int:
        return len(self.zeta) - 1

    @property
    def intervals(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple(zip(self.zeta[:-1], self.zeta[1:]))

    def interval(self, e: int) -> tuple[Fraction, Fraction]:
        """Interval e (1-based)."""
        if not 1 <= e <= self.num_intervals:
            raise BasisIndexError(e, self.num_intervals)
        return self.zeta[e - 1], self.zeta[e]

    def index_of(self, value: Fraction) -> int:
        """1-based position of a breakpoint value."""
        return self.zeta.index(Fraction(value)) + 1

    def interval_of(self, x: float) -> Optional[int]:
        """Interval containing x strictly inside, or None when x is a breakpoint or outside (0,1)."""
        for e, (a, b) in enumerate(self.intervals, start=1):
            if a < x < b:
                return e
        return None


@dataclass(frozen=True)
class KnotVector:
    """
    Knot sequence Ξ on [0, 1] with a boundary convention.

    Invariants: non-decreasing, starts at 0 and ends at 1, end knots repeated
    exactly p (Homogeneous) or p+1 (Open) times, interior knots at most p times.
    """

    knots: tuple[Fraction, ...]
    degree: int
    boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS

    def __post_init__(self) -> None:
        knots = tuple(Fraction(k) for k in self.knots)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if p < 1:
            raise KnotVectorError(f"degree must be positive, got {p}", knots)
        if any(b < a for a, b in zip(knots, knots[1:])):
            raise KnotVectorError("knots must be non-decreasing", knots)
        if not knots or knots[0] != 0 or knots[-1] != 1:
            raise KnotVectorError("knots must start at 0 and end at 1", knots)
        repeats = _boundary_repeats(p, self.boundary_mode)
        if knots.count(Fraction(0)) != repeats or knots.count(Fraction(1)) != repeats:
            raise KnotVectorError(
                f"{self.boundary_mode.value} mode needs exactly {repeats} copies of 0 and 1", knots
            )
        for value in set(knots) - {Fraction(0), Fraction(1)}:
            if knots.count(value) > p:
                raise KnotVectorError(f"interior knot {value} repeated more than {p} times", knots)

    @classmethod
    def from_breakpoints(
        cls,
        degree: int,
        breakpoints: Sequence[KnotLike],
        boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS,
        multiplicities: Optional[Sequence[int]] = None,
    ) -> "KnotVector":
        """Knot vector over the given breakpoints (interior multiplicity 1 unless given)."""
        zeta = [Fraction(b) for b in breakpoints]
        interior = zeta[1:-1]
        mults = list(multiplicities) if multiplicities is not None else [1] * len(interior)
        if len(mults) != len(interior):
            raise KnotVectorError("one multiplicity per interior breakpoint is required")
        repeats = _boundary_repeats(degree, boundary_mode)
        knots: list[Fraction] = [zeta[0]] * repeats
        for value, mult in zip(interior, mults):
            knots.extend([value] * mult)
        knots.extend([zeta[-1]] * repeats)
        return cls(tuple(knots), degree, boundary_mode)

    @classmethod
    def uniform(
        cls, degree: int, intervals: int, boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS
    ) -> "KnotVector":
        return cls.from_breakpoints(
            degree, [Fraction(k, intervals) for k in range(intervals + 1)], boundary_mode
        )

    @property
    def m(self) -> int:
        """m = len(Ξ) − p − 1."""
        return len(self.knots) - self.degree - 1

    def knot(self, i: int) -> Fraction:
        """ξ_i, 1-based."""
        return self.knots[i - 1]

    @cached_property
    def breakpoints(self) -> Breakpoints:
        return Breakpoints(tuple(sorted(set(self.knots))))

    def contains(self, other: "KnotVector") -> bool:
        """True when every knot of other (with multiplicity) appears in self."""
        return all(self.knots.count(k) >= other.knots.count(k) for k in set(other.knots))


def dyadic_refine(kv: KnotVector) -> KnotVector:
    """Insert the midpoint of every nonempty knot span once."""
    zeta = kv.breakpoints.zeta
    midpoints = [(a + b) / 2 for a, b in zip(zeta[:-1], zeta[1:])]
    return KnotVector(tuple(sorted(kv.knots + tuple(midpoints))), kv.degree, kv.boundary_mode)


@lru_cache(maxsize=None)
def refined_knot_vector(kv: KnotVector, levels: int) -> KnotVector:
    """kv after `levels` dyadic refinements."""
    if levels <= 0:
        return kv
    return dyadic_refine(refined_knot_vector(kv, levels - 1))


@dataclass(frozen=True)
class Support:
    """Open support (lo, hi) with its knot indices and covered breakpoint intervals (1-based, inclusive)."""

    lo: Fraction
    hi: Fraction
    lo_knot: int
    hi_knot: int
    first_interval: int
    last_interval: int

    @property
    def intervals(self) -> range:
        return range(self.first_interval, self.last_interval + 1)

    def closure_intersection(self, other: "Support") -> Optional[tuple[Fraction, Fraction]]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return (lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class UnivariateSpace:
    """S^j(Ξ) for j ∈ {0, 1}."""

    knot_vector: KnotVector
    form_degree: int = 0

    def __post_init__(self) -> None:
        if self.form_degree not in (0, 1):
            raise ValueError(f"form degree must be 0 or 1, got {self.form_degree}")

    @property
    def degree(self) -> int:
        return self.knot_vector.degree - self.form_degree

    @cached_property
    def local_knots(self) -> tuple[Fraction, ...]:
        """Knot sequence whose B-splines of degree `self.degree` form this basis."""
        knots = self.knot_vector.knots
        if self.form_degree == 1 and self.knot_vector.boundary_mode is BoundaryMode.OPEN:
            return knots[1:-1]
        return knots

    @property
    def dimension(self) -> int:
        return len(self.local_knots) - self.degree - 1

    def _check(self, i: int) -> None:
        if not 1 <= i <= self.dimension:
            raise BasisIndexError(i, self.dimension)

    @cached_property
    def _supports(self) -> tuple[Support, ...]:
        bp = self.knot_vector.breakpoints
        t = self.local_knots
        offset = (len(self.knot_vector.knots) - len(t)) // 2
        out = []
        for i in range(1, self.dimension + 1):
            lo, hi = t[i - 1], t[i + self.degree]
            out.append(
                Support(
                    lo=lo,
                    hi=hi,
                    lo_knot=i + offset,
                    hi_knot=i + self.degree + 1 + offset,
                    first_interval=bp.index_of(lo),
                    last_interval=bp.index_of(hi) - 1,
                )
            )
        return tuple(out)

    def support(self, i: int) -> Support:
        """Open support (ξ_i, ξ_{i+p+1−j}) of B^j_i."""
        self._check(i)
        return self._supports[i - 1]

    @cached_property
    def _interval_functions(self) -> tuple[tuple[int, ...], ...]:
        buckets: list[list[int]] = [[] for _ in range(self.knot_vector.breakpoints.num_intervals)]
        for i, s in enumerate(self._supports, start=1):
            for e in s.intervals:
                buckets[e - 1].append(i)
        return tuple(tuple(b) for b in buckets)

    def functions_on(self, e: int) -> tuple[int, ...]:
        """Indices of basis functions whose support contains interval e (1-based)."""
        return self._interval_functions[e - 1]

    # ---- evaluation ----

    @cached_property
    def _open_knots(self) -> tuple[np.ndarray, int]:
        """Local knots padded to p'+1 end repetitions, and the index shift of our basis inside it."""
        t = [float(k) for k in self.local_knots]
        q = self.degree
        pad = q + 1 - self.local_knots.count(Fraction(0))
        padded = [0.0] * pad + t + [1.0] * pad
        return np.asarray(padded), pad

    def basis_rows(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Nonzero basis values at points x.

        Returns (values, columns), both of shape (len(x), degree+1); columns are
        0-based basis indices, entries for padding functions carry value 0 and
        column -1.
        """
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        t, pad = self._open_knots
        q = self.degree
        n_open = len(t) - q - 1
        span = np.clip(np.searchsorted(t, x, side="right") - 1, q, n_open - 1)

        values = np.zeros((x.size, q + 1))
        values[:, 0] = 1.0
        left = np.zeros((x.size, q + 1))
        right = np.zeros((x.size, q + 1))
        for j in range(1, q + 1):
            left[:, j] = x - t[span + 1 - j]
            right[:, j] = t[span + j] - x
            saved = np.zeros(x.size)
            for r in range(j):
                denom = right[:, r + 1] + left[:, j - r]
                temp = np.divide(values[:, r], denom, out=np.zeros(x.size), where=denom != 0.0)
                values[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            values[:, j] = saved

        columns = span[:, None] - q + np.arange(q + 1)[None, :] - pad
        invalid = (columns < 0) | (columns >= self.dimension)
        values[invalid] = 0.0
        columns[invalid] = -1
        return values, columns

    def evaluate(self, i: int, x: Union[float, Fraction]) -> float:
        """B^j_i(x), right-continuous at breakpoints and left-continuous at 1."""
        self._check(i)
        values, columns = self.basis_rows(np.array([float(x)]))
        hit = columns[0] == i - 1
        return float(values[0][hit].sum())

    def evaluate_all(self, x: Iterable[float]) -> np.ndarray:
        """Dense (len(x), dimension) matrix of basis values."""
        values, columns = self.basis_rows(np.asarray(list(x), dtype=float))
        out = np.zeros((values.shape[0], self.dimension))
        rows = np.repeat(np.arange(values.shape[0]), values.shape[1])
        mask = columns.ravel() >= 0
        np.add.at(out, (rows[mask], columns.ravel()[mask]), values.ravel()[mask])
        return out


def support(space: UnivariateSpace, i: int) -> Support:
    return space.support(i)


def evaluate(space: UnivariateSpace, i: int, x: Union[float, Fraction]) -> float:
    return space.evaluate(i, x)


def dimension(space: UnivariateSpace) -> int:
    return space.dimension


# -----------------------------------------------------------------------------
# Knot insertion and differentiation
# -----------------------------------------------------------------------------


def _insert_knot(knots: tuple[Fraction, ...], degree: int, value: Fraction) -> dict[tuple[int, int], Fraction]:
    """
    Boehm insertion of one knot.

    Column i (0-based) holds the expansion N_i = α_i N'_i + (1 − α_{i+1}) N'_{i+1}
    of the old B-spline in the new basis.
    """
    n = len(knots) - degree - 1

    def alpha(i: int) -> Fraction:
        if knots[i + degree] <= value:
            return Fraction(1)
        if knots[i] >= value:
            return Fraction(0)
        return (value - knots[i]) / (knots[i + degree] - knots[i])

    entries: dict[tuple[int, int], Fraction] = {}
    for i in range(n):
        a_i = alpha(i)
        if a_i:
            entries[(i, i)] = a_i
        a_next = alpha(i + 1) if i + 1 + degree < len(knots) else Fraction(0)
        if 1 - a_next:
            entries[(i + 1, i)] = 1 - a_next
    return entries


def subdivision_matrix(
    coarse: UnivariateSpace, fine: UnivariateSpace, mode: ScalarMode = ScalarMode.RATIONAL
) -> SparseMatrix:
    """
    Coefficients of the coarse basis in the fine basis, dim(fine) × dim(coarse).

    **Input (request):** two spaces of the same degree, form degree and boundary mode,
    the fine knot vector containing the coarse one.

    **Output (response):** SparseMatrix whose column i expands B_i (coarse); all entries ≥ 0.
    """
    kc, kf = coarse.knot_vector, fine.knot_vector
    if (
        coarse.form_degree != fine.form_degree
        or kc.degree != kf.degree
        or kc.boundary_mode is not kf.boundary_mode
    ):
        raise NotNestedError("spaces differ in degree, form degree or boundary mode")
    if not kf.contains(kc):
        raise NotNestedError("fine knot vector does not contain the coarse one")

    knots = coarse.local_knots
    degree = coarse.degree
    extra: list[Fraction] = []
    for value in sorted(set(kf.knots)):
        extra.extend([value] * (kf.knots.count(value) - kc.knots.count(value)))

    result = SparseMatrix.identity(coarse.dimension, ScalarMode.RATIONAL)
    for value in extra:
        step_entries = _insert_knot(knots, degree, value)
        knots = tuple(sorted(knots + (value,)))
        n_new = len(knots) - degree - 1
        step = SparseMatrix.from_entries(step_entries, (n_new, n_new - 1))
        result = step @ result
    return result if mode is ScalarMode.RATIONAL else result.to_float()


@lru_cache(maxsize=None)
def level_subdivision(kv: KnotVector, form_degree: int) -> SparseMatrix:
    """Rational subdivision of S^j(kv) into S^j(dyadic_refine(kv))."""
    return subdivision_matrix(UnivariateSpace(kv, form_degree), UnivariateSpace(dyadic_refine(kv), form_degree))


@lru_cache(maxsize=None)
def derivative_matrix(kv: KnotVector) -> SparseMatrix:
    """
    d/dξ from S⁰ to S¹ coefficients, dim(S¹) × dim(S⁰), exact.

    N_i' = p/(ξ_{i+p} − ξ_i) M_i − p/(ξ_{i+p+1} − ξ_{i+1}) M_{i+1}, with M the
    degree p−1 B-splines on Ξ; terms whose divisor vanishes are identically
    zero functions and dropped. In Open mode S¹ starts at M_1 (0-based).
    """
    p = kv.degree
    xi = kv.knots
    s0 = UnivariateSpace(kv, 0)
    s1 = UnivariateSpace(kv, 1)
    shift = (len(xi) - len(s1.local_knots)) // 2
    entries: dict[tuple[int, int], Fraction] = {}
    for i in range(s0.dimension):
        left = xi[i + p] - xi[i]
        right = xi[i + p + 1] - xi[i + 1]
        if left:
            entries[(i - shift, i)] = Fraction(p) / left
        if right:
            entries[(i + 1 - shift, i)] = -Fraction(p) / right
    return SparseMatrix.from_entries(entries, (s1.dimension, s0.dimension))
