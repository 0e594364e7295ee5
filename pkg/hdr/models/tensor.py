"""
Two-dimensional tensor-product spline spaces B^𝐣_ℓ, index bookkeeping and
per-level tensor meshes.

Flat basis ordering is lexicographic with i₁ fastest, so an operator
A₂ ⊗ A₁ (second direction outer) acts on flat coefficient vectors.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse

from hdr.core.constants import ONE_FORM_PATTERNS, TWO_FORM, ZERO_FORM
from hdr.core.enums import ScalarMode
from hdr.core.linalg import SparseMatrix, hstack, vstack
from hdr.models.univariate import (
    BasisIndexError,
    Breakpoints,
    KnotVector,
    Support,
    UnivariateSpace,
    derivative_matrix,
    level_subdivision,
    refined_knot_vector,
)


class AmbiguousPointError(ValueError):
    """Raised when a point lies on a mesh line and has no unique element."""

    def __init__(self, point: Sequence[float]):
        super().__init__(f"point {tuple(point)} lies on a mesh line (ambiguous)")
        self.point = tuple(point)


class MultiIndex(NamedTuple):
    """1-based tensor index (i₁, i₂)."""

    i1: int
    i2: int

    def shift(self, k: int, delta: int) -> "MultiIndex":
        """𝐢 + delta·δ_k for direction k ∈ {1, 2}."""
        return MultiIndex(self.i1 + delta, self.i2) if k == 1 else MultiIndex(self.i1, self.i2 + delta)

    def component(self, k: int) -> int:
        return self.i1 if k == 1 else self.i2

    def distance(self, other: "MultiIndex") -> int:
        return abs(self.i1 - other.i1) + abs(self.i2 - other.i2)


class Element(NamedTuple):
    """1-based element (interval) index (e₁, e₂) of one level."""

    e1: int
    e2: int

    def parent(self) -> "Element":
        return Element((self.e1 + 1) // 2, (self.e2 + 1) // 2)

    def ancestor(self, levels_up: int) -> "Element":
        return Element(((self.e1 - 1) >> levels_up) + 1, ((self.e2 - 1) >> levels_up) + 1)

    def children(self) -> tuple["Element", ...]:
        a, b = 2 * self.e1 - 1, 2 * self.e2 - 1
        return (Element(a, b), Element(a + 1, b), Element(a, b + 1), Element(a + 1, b + 1))


class ElementBox(NamedTuple):
    """Inclusive element-index rectangle [first1..last1] × [first2..last2]."""

    first1: int
    last1: int
    first2: int
    last2: int

    def elements(self) -> Iterator[Element]:
        for e2 in range(self.first2, self.last2 + 1):
            for e1 in range(self.first1, self.last1 + 1):
                yield Element(e1, e2)

    def contains(self, element: Element) -> bool:
        return self.first1 <= element.e1 <= self.last1 and self.first2 <= element.e2 <= self.last2

    def coarsen(self, levels_up: int) -> "ElementBox":
        """Smallest box of ancestors `levels_up` levels coarser."""
        d = levels_up
        return ElementBox(
            ((self.first1 - 1) >> d) + 1, ((self.last1 - 1) >> d) + 1,
            ((self.first2 - 1) >> d) + 1, ((self.last2 - 1) >> d) + 1,
        )

    def refine(self, levels_down: int) -> "ElementBox":
        """Box of all descendants `levels_down` levels finer."""
        s = 1 << levels_down
        return ElementBox(
            (self.first1 - 1) * s + 1, self.last1 * s, (self.first2 - 1) * s + 1, self.last2 * s
        )

    def intersects(self, other: "ElementBox") -> bool:
        return (
            self.first1 <= other.last1 and other.first1 <= self.last1
            and self.first2 <= other.last2 and other.first2 <= self.last2
        )

    @property
    def size(self) -> int:
        return (self.last1 - self.first1 + 1) * (self.last2 - self.first2 + 1)


@dataclass(frozen=True)
class TensorSupport:
    """Open rectangle supp = (lo₁,hi₁) × (lo₂,hi₂) with its element box."""

    factors: tuple[Support, Support]

    @property
    def rectangle(self) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        s1, s2 = self.factors
        return (s1.lo, s1.hi), (s2.lo, s2.hi)

    @property
    def box(self) -> ElementBox:
        s1, s2 = self.factors
        return ElementBox(s1.first_interval, s1.last_interval, s2.first_interval, s2.last_interval)


@dataclass(frozen=True)
class TensorSpace:
    """B^𝐣_ℓ = S^{j1}(Ξ_{ℓ,1}) ⊗ S^{j2}(Ξ_{ℓ,2})."""

    level: int
    pattern: tuple[int, int]
    factors: tuple[UnivariateSpace, UnivariateSpace]

    @property
    def shape(self) -> tuple[int, int]:
        return self.factors[0].dimension, self.factors[1].dimension

    @property
    def dimension(self) -> int:
        n1, n2 = self.shape
        return n1 * n2

    def is_valid(self, index: MultiIndex) -> bool:
        n1, n2 = self.shape
        return 1 <= index.i1 <= n1 and 1 <= index.i2 <= n2

    def _check(self, index: MultiIndex) -> None:
        n1, n2 = self.shape
        if not 1 <= index.i1 <= n1:
            raise BasisIndexError(index.i1, n1)
        if not 1 <= index.i2 <= n2:
            raise BasisIndexError(index.i2, n2)

    def flat_index(self, index: MultiIndex) -> int:
        """0-based position, i₁ fastest."""
        self._check(index)
        return (index.i1 - 1) + self.shape[0] * (index.i2 - 1)

    def multi_index(self, flat: int) -> MultiIndex:
        n1 = self.shape[0]
        return MultiIndex(flat % n1 + 1, flat // n1 + 1)

    def indices(self) -> Iterator[MultiIndex]:
        n1, n2 = self.shape
        for i2 in range(1, n2 + 1):
            for i1 in range(1, n1 + 1):
                yield MultiIndex(i1, i2)

    def support(self, index: MultiIndex) -> TensorSupport:
        self._check(index)
        return TensorSupport((self.factors[0].support(index.i1), self.factors[1].support(index.i2)))

    def box(self, index: MultiIndex) -> ElementBox:
        return self.support(index).box

    def functions_on(self, element: Element) -> Iterator[MultiIndex]:
        """Basis functions of this space whose support contains the element."""
        f1, f2 = self.factors
        for i2 in f2.functions_on(element.e2):
            for i1 in f1.functions_on(element.e1):
                yield MultiIndex(i1, i2)

    def evaluate(self, index: MultiIndex, x: float, y: float) -> float:
        self._check(index)
        return self.factors[0].evaluate(index.i1, x) * self.factors[1].evaluate(index.i2, y)

    def design_matrix(self, points: np.ndarray) -> scipy.sparse.csr_matrix:
        """Sparse (len(points), dimension) matrix of basis values at points (N, 2)."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        v1, c1 = self.factors[0].basis_rows(points[:, 0])
        v2, c2 = self.factors[1].basis_rows(points[:, 1])
        n1 = self.shape[0]
        data = v2[:, :, None] * v1[:, None, :]
        cols = c2[:, :, None] * n1 + c1[:, None, :]
        valid = (c2[:, :, None] >= 0) & (c1[:, None, :] >= 0)
        rows = np.broadcast_to(np.arange(points.shape[0])[:, None, None], data.shape)
        out = scipy.sparse.csr_matrix(
            (data[valid], (rows[valid], cols[valid])), shape=(points.shape[0], self.dimension)
        )
        out.eliminate_zeros()
        return out


def tensor_support(space: TensorSpace, index: MultiIndex) -> TensorSupport:
    return space.support(index)


@dataclass(frozen=True)
class TensorMesh:
    """𝓠_ℓ: all rectangles I₁ × I₂ of the two breakpoint interval sets."""

    level: int
    breakpoints: tuple[Breakpoints, Breakpoints]

    @property
    def shape(self) -> tuple[int, int]:
        return self.breakpoints[0].num_intervals, self.breakpoints[1].num_intervals

    def elements(self) -> Iterator[Element]:
        n1, n2 = self.shape
        return ElementBox(1, n1, 1, n2).elements()

    def rectangle(self, element: Element) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        return self.breakpoints[0].interval(element.e1), self.breakpoints[1].interval(element.e2)


def element_of(mesh: TensorMesh, point: Sequence[float]) -> Element:
    """Unique element containing point; points on mesh lines are ambiguous."""
    x, y = float(point[0]), float(point[1])
    e1 = mesh.breakpoints[0].interval_of(x)
    e2 = mesh.breakpoints[1].interval_of(y)
    if e1 is None or e2 is None:
        raise AmbiguousPointError(point)
    return Element(e1, e2)


@dataclass(frozen=True)
class FormSpaceTriple:
    """X⁰ = B^(0,0), X¹ = B^(1,0) × B^(0,1), X² = B^(1,1) at one level."""

    level: int
    knot_vectors: tuple[KnotVector, KnotVector]

    def space(self, pattern: tuple[int, int]) -> TensorSpace:
        return _tensor_space(self.level, tuple(pattern), self.knot_vectors)

    @property
    def x0(self) -> TensorSpace:
        return self.space(ZERO_FORM)

    @property
    def x1(self) -> tuple[TensorSpace, TensorSpace]:
        return self.space(ONE_FORM_PATTERNS[0]), self.space(ONE_FORM_PATTERNS[1])

    @property
    def x2(self) -> TensorSpace:
        return self.space(TWO_FORM)

    @property
    def x1_block_sizes(self) -> tuple[int, int]:
        a, b = self.x1
        return a.dimension, b.dimension

    @cached_property
    def mesh(self) -> TensorMesh:
        return TensorMesh(self.level, (self.knot_vectors[0].breakpoints, self.knot_vectors[1].breakpoints))


@lru_cache(maxsize=None)
def _tensor_space(level: int, pattern: tuple[int, int], kvs: tuple[KnotVector, KnotVector]) -> TensorSpace:
    return TensorSpace(level, pattern, (UnivariateSpace(kvs[0], pattern[0]), UnivariateSpace(kvs[1], pattern[1])))


@lru_cache(maxsize=None)
def level_spaces(base: tuple[KnotVector, KnotVector], level: int) -> FormSpaceTriple:
    """Form spaces at `level` dyadic refinements of the base knot vectors."""
    return FormSpaceTriple(level, (refined_knot_vector(base[0], level), refined_knot_vector(base[1], level)))


def _identity(space: UnivariateSpace) -> SparseMatrix:
    return SparseMatrix.identity(space.dimension)


@lru_cache(maxsize=None)
def partial_matrices(triple: FormSpaceTriple) -> dict[str, SparseMatrix]:
    """Exact ∂₁, ∂₂ between the tensor spaces of one level, keyed by source→target."""
    kv1, kv2 = triple.knot_vectors
    d1, d2 = derivative_matrix(kv1), derivative_matrix(kv2)
    s0_1, s0_2 = UnivariateSpace(kv1, 0), UnivariateSpace(kv2, 0)
    s1_1, s1_2 = UnivariateSpace(kv1, 1), UnivariateSpace(kv2, 1)
    return {
        "d1_00": _identity(s0_2).kron(d1),  # (0,0) → (1,0)
        "d2_00": d2.kron(_identity(s0_1)),  # (0,0) → (0,1)
        "d2_10": d2.kron(_identity(s1_1)),  # (1,0) → (1,1)
        "d1_01": _identity(s1_2).kron(d1),  # (0,1) → (1,1)
    }


def grad_matrix(triple: FormSpaceTriple, mode: ScalarMode = ScalarMode.RATIONAL) -> SparseMatrix:
    """grad = (∂₁ into B^(1,0); ∂₂ into B^(0,1)), dim X¹ × dim X⁰."""
    parts = partial_matrices(triple)
    out = vstack([parts["d1_00"], parts["d2_00"]])
    return out if mode is ScalarMode.RATIONAL else out.to_float()


def curl_matrix(triple: FormSpaceTriple, mode: ScalarMode = ScalarMode.RATIONAL) -> SparseMatrix:
    """curl v = ∂₁v₂ − ∂₂v₁ as [−∂₂ | ∂₁], dim X² × dim X¹."""
    parts = partial_matrices(triple)
    out = hstack([-parts["d2_10"], parts["d1_01"]])
    return out if mode is ScalarMode.RATIONAL else out.to_float()


@lru_cache(maxsize=None)
def tensor_subdivision(base: tuple[KnotVector, KnotVector], level: int, pattern: tuple[int, int]) -> SparseMatrix:
    """Exact subdivision B^𝐣_ℓ → B^𝐣_{ℓ+1} as S₂ ⊗ S₁."""
    kv1 = refined_knot_vector(base[0], level)
    kv2 = refined_knot_vector(base[1], level)
    return level_subdivision(kv2, pattern[1]).kron(level_subdivision(kv1, pattern[0]))
