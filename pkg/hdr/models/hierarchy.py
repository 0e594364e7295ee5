"""
Nested refinement domains, the hierarchical mesh and HB / THB bases.

Ω_{ℓ+1} is stored as the set `refined[ℓ]` of level-ℓ elements it covers, so
every containment test is integer interval inclusion. Level-L coefficient
vectors of the active functions (the embedding R_𝐣) are built level by
level: W_{ℓ+1} = [Trunc_{ℓ+1} · S_ℓ · W_ℓ | E_{ℓ+1}], with the truncation
skipped for the HB variant.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple, Optional, Sequence

from hdr.core.constants import ZERO_FORM
from hdr.core.enums import BasisVariant, BoundaryMode
from hdr.core.linalg import SparseMatrix, hstack
from hdr.models.tensor import (
    Element,
    ElementBox,
    FormSpaceTriple,
    MultiIndex,
    TensorMesh,
    TensorSpace,
    level_spaces,
    tensor_subdivision,
)
from hdr.models.univariate import KnotVector, level_subdivision, refined_knot_vector

logger = logging.getLogger(__name__)


class NestednessError(ValueError):
    """Raised when marked elements leave Ω_ℓ or are not elements of level ℓ."""

    def __init__(self, message: str, level: int, elements: Iterable[Element] = ()):
        super().__init__(message)
        self.level = level
        self.elements = sorted(elements)


class InactiveFunctionError(KeyError):
    """Raised when a (level, index) pair is not an active hierarchical function."""


@dataclass(frozen=True)
class RefinementDomains:
    """
    Ω₀ ⊇ Ω₁ ⊇ … as element sets.

    refined[ℓ] holds the level-ℓ elements making up Ω_{ℓ+1}; generators[ℓ]
    holds level-ℓ 0-form witnesses whose supports define Ω_{ℓ+1}. Trailing
    empty levels are dropped, so L = len(refined).
    """

    base: tuple[KnotVector, KnotVector]
    refined: tuple[frozenset[Element], ...] = ()
    generators: tuple[frozenset[MultiIndex], ...] = ()

    def __post_init__(self) -> None:
        refined = [frozenset(Element(*e) for e in level) for level in self.refined]
        generators = [frozenset(MultiIndex(*g) for g in level) for level in self.generators]
        while refined and not refined[-1]:
            refined.pop()
        generators = (generators + [frozenset()] * len(refined))[: len(refined)]
        object.__setattr__(self, "refined", tuple(refined))
        object.__setattr__(self, "generators", tuple(generators))

    @classmethod
    def uniform(
        cls,
        degree: int,
        intervals: int,
        boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS,
    ) -> "RefinementDomains":
        kv = KnotVector.uniform(degree, intervals, boundary_mode)
        return cls((kv, kv))

    @property
    def max_level(self) -> int:
        return len(self.refined)

    @property
    def boundary_mode(self) -> BoundaryMode:
        return self.base[0].boundary_mode

    @property
    def degrees(self) -> tuple[int, int]:
        return self.base[0].degree, self.base[1].degree

    def spaces(self, level: int) -> FormSpaceTriple:
        return level_spaces(self.base, level)

    def tensor_space(self, level: int, pattern: tuple[int, int] = ZERO_FORM) -> TensorSpace:
        return self.spaces(level).space(pattern)

    def mesh(self, level: int) -> TensorMesh:
        return self.spaces(level).mesh

    def knot_vectors(self, level: int) -> tuple[KnotVector, KnotVector]:
        return refined_knot_vector(self.base[0], level), refined_knot_vector(self.base[1], level)

    def refined_at(self, level: int) -> frozenset[Element]:
        return self.refined[level] if 0 <= level < len(self.refined) else frozenset()

    def generators_at(self, level: int) -> frozenset[MultiIndex]:
        return self.generators[level] if 0 <= level < len(self.generators) else frozenset()

    def is_element(self, level: int, element: Element) -> bool:
        n1, n2 = self.mesh(level).shape
        return 1 <= element.e1 <= n1 and 1 <= element.e2 <= n2

    @cached_property
    def _omegas(self) -> tuple[frozenset[Element], ...]:
        out = [frozenset(self.mesh(0).elements())]
        for level_set in self.refined:
            out.append(frozenset(child for e in level_set for child in e.children()))
        return tuple(out)

    def omega(self, level: int) -> frozenset[Element]:
        """Level-ℓ elements inside Ω_ℓ (empty beyond L)."""
        return self._omegas[level] if level < len(self._omegas) else frozenset()

    def box_in_omega(self, box: ElementBox, box_level: int, k: int) -> bool:
        """Whether the union of the level-`box_level` elements of box lies in Ω_k."""
        if k == 0:
            return True
        region = self.refined_at(k - 1)
        if not region:
            return False
        d = box_level - (k - 1)
        target = box.coarsen(d) if d >= 0 else box.refine(-d)
        return all(e in region for e in target.elements())

    def with_refined(
        self,
        level: int,
        elements: Iterable[Element],
        generators: Iterable[MultiIndex] = (),
    ) -> "RefinementDomains":
        refined = list(self.refined) + [frozenset()] * max(0, level + 1 - len(self.refined))
        gens = list(self.generators) + [frozenset()] * max(0, level + 1 - len(self.generators))
        refined[level] = refined[level] | frozenset(Element(*e) for e in elements)
        gens[level] = gens[level] | frozenset(MultiIndex(*g) for g in generators)
        return RefinementDomains(self.base, tuple(refined), tuple(gens))

    def with_generators(self, level: int, generators: Iterable[MultiIndex]) -> "RefinementDomains":
        gens = list(self.generators)
        gens[level] = frozenset(MultiIndex(*g) for g in generators)
        return RefinementDomains(self.base, self.refined, tuple(gens))


# -----------------------------------------------------------------------------
# Hierarchical mesh
# -----------------------------------------------------------------------------


class ActiveElement(NamedTuple):
    level: int
    element: Element


def hierarchical_mesh(domains: RefinementDomains) -> tuple[ActiveElement, ...]:
    """Active elements: level-ℓ elements in Ω_ℓ and not in Ω_{ℓ+1}, sorted by level."""
    out: list[ActiveElement] = []
    for level in range(domains.max_level + 1):
        refined = domains.refined_at(level)
        out.extend(ActiveElement(level, e) for e in sorted(domains.omega(level)) if e not in refined)
    return tuple(out)


# -----------------------------------------------------------------------------
# Refinement
# -----------------------------------------------------------------------------


def refine_mesh(
    domains: RefinementDomains,
    level: int,
    marked: Iterable[Element],
    *,
    strict: bool = True,
    generators: Iterable[MultiIndex] = (),
) -> RefinementDomains:
    """
    Grow Ω_{ℓ+1} by the marked level-ℓ elements.

    **Input (request):**
        - domains: current refinement domains.
        - level: ℓ of the marked elements.
        - marked: level-ℓ elements to refine.
        - strict: reject elements outside Ω_ℓ (NestednessError). exact_refine passes False and
          repairs nestedness with its parent loop.
        - generators: level-ℓ 0-form witnesses to record for Ω_{ℓ+1}.

    **Output (response):** new RefinementDomains; the input is unchanged.
    """
    marked = frozenset(Element(*e) for e in marked)
    generators = frozenset(MultiIndex(*g) for g in generators)
    if not marked and not generators:
        return domains
    invalid = [e for e in marked if not domains.is_element(level, e)]
    if invalid:
        raise NestednessError(f"{len(invalid)} marked element(s) do not exist at level {level}", level, invalid)
    if strict:
        omega = domains.omega(level)
        outside = [e for e in marked if e not in omega]
        if outside:
            raise NestednessError(f"{len(outside)} marked element(s) lie outside Ω_{level}", level, outside)
    return domains.with_refined(level, marked, generators)


def support_elements(domains: RefinementDomains, level: int, functions: Iterable[MultiIndex], pattern=ZERO_FORM) -> set[Element]:
    """Union of the element boxes of level-ℓ functions."""
    space = domains.tensor_space(level, pattern)
    out: set[Element] = set()
    for index in functions:
        out.update(space.box(MultiIndex(*index)).elements())
    return out


def refine_supports(
    domains: RefinementDomains, level: int, functions: Iterable[MultiIndex], *, strict: bool = True
) -> RefinementDomains:
    """Refine the supports of level-ℓ 0-forms and record them as generators."""
    functions = list(functions)
    return refine_mesh(
        domains, level, support_elements(domains, level, functions), strict=strict, generators=functions
    )


def contained_functions(
    domains: RefinementDomains,
    level: int,
    pattern: tuple[int, int] = ZERO_FORM,
    region: Optional[frozenset[Element]] = None,
) -> frozenset[MultiIndex]:
    """
    Level-ℓ functions of pattern 𝐣 whose support lies in Ω_{ℓ+1}.

    For 𝐣 = (0,0) this is the lattice B⁰_{ℓ,ℓ+1}. `region` overrides Ω_{ℓ+1}
    by an explicit set of level-ℓ elements.
    """
    region = domains.refined_at(level) if region is None else region
    if not region:
        return frozenset()
    space = domains.tensor_space(level, pattern)
    candidates: set[MultiIndex] = set()
    for element in region:
        candidates.update(space.functions_on(element))
    return frozenset(
        index for index in candidates if all(e in region for e in space.box(index).elements())
    )


def greedy_generators(domains: RefinementDomains, level: int) -> frozenset[MultiIndex]:
    """A small witness set: members of B⁰_{ℓ,ℓ+1} picked while they still cover new elements."""
    space = domains.tensor_space(level, ZERO_FORM)
    covered: set[Element] = set()
    chosen: set[MultiIndex] = set()
    for index in sorted(contained_functions(domains, level)):
        elements = set(space.box(index).elements())
        if not elements <= covered:
            chosen.add(index)
            covered |= elements
    return frozenset(chosen)


# -----------------------------------------------------------------------------
# Assumption 1
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Assumption1Violation:
    level: int
    uncovered: frozenset[Element] = frozenset()
    not_nested: frozenset[Element] = frozenset()
    stale_generators: frozenset[MultiIndex] = frozenset()


def check_assumption1(domains: RefinementDomains) -> list[Assumption1Violation]:
    """
    Report levels where Ω_{ℓ+1} is not a union of level-ℓ 0-form supports.

    Coverage is checked against all of B⁰_{ℓ,ℓ+1}, so the result does not depend on
    which witnesses were stored. Nestedness breaks and generators whose support
    leaves Ω_{ℓ+1} are reported as well.
    """
    violations: list[Assumption1Violation] = []
    for level in range(domains.max_level):
        region = domains.refined_at(level)
        space = domains.tensor_space(level, ZERO_FORM)
        covered: set[Element] = set()
        for index in contained_functions(domains, level):
            covered.update(space.box(index).elements())
        uncovered = frozenset(region - covered)
        omega = domains.omega(level)
        not_nested = frozenset(e for e in region if e not in omega)
        stale = frozenset(
            g for g in domains.generators_at(level)
            if not space.is_valid(g) or not all(e in region for e in space.box(g).elements())
        )
        if uncovered or not_nested or stale:
            violations.append(Assumption1Violation(level, uncovered, not_nested, stale))
    return violations


# -----------------------------------------------------------------------------
# Truncation, parents
# -----------------------------------------------------------------------------


def truncation_matrix(
    domains: RefinementDomains, level: int, pattern: tuple[int, int] = ZERO_FORM
) -> SparseMatrix:
    """Diagonal 0/1 matrix on B^𝐣_level zeroing functions with supp ⊆ Ω_level."""
    space = domains.tensor_space(level, pattern)
    inside = contained_functions(domains, level, pattern, domains.omega(level))
    keep = [0 if space.multi_index(k) in inside else 1 for k in range(space.dimension)]
    return SparseMatrix.diagonal(keep)


def truncate(
    coefficients: Sequence, domains: RefinementDomains, level: int, pattern: tuple[int, int] = ZERO_FORM
) -> list:
    """trunc^level: zero the level-`level` coefficients of functions supported in Ω_level."""
    return truncation_matrix(domains, level, pattern).apply(list(coefficients))


@lru_cache(maxsize=None)
def _univariate_parents(kv: KnotVector, form_degree: int) -> dict[int, tuple[int, ...]]:
    """Fine index → coarse indices with a nonzero subdivision coefficient (1-based)."""
    out: dict[int, list[int]] = {}
    for (row, col) in level_subdivision(kv, form_degree).entries():
        out.setdefault(row + 1, []).append(col + 1)
    return {k: tuple(sorted(v)) for k, v in out.items()}


def parents(
    domains: RefinementDomains, level: int, index: MultiIndex, pattern: tuple[int, int] = ZERO_FORM
) -> frozenset[MultiIndex]:
    """Level-(level−1) functions whose subdivision has a nonzero entry at the level-`level` index."""
    if level < 1:
        return frozenset()
    kv1, kv2 = domains.knot_vectors(level - 1)
    p1 = _univariate_parents(kv1, pattern[0]).get(index.i1, ())
    p2 = _univariate_parents(kv2, pattern[1]).get(index.i2, ())
    return frozenset(MultiIndex(a, b) for a in p1 for b in p2)


def children(
    domains: RefinementDomains, level: int, index: MultiIndex, pattern: tuple[int, int] = ZERO_FORM
) -> frozenset[MultiIndex]:
    """Level-(level+1) functions appearing in the subdivision of a level-`level` function."""
    kv1, kv2 = domains.knot_vectors(level)
    c1 = sorted(r for r, cols in _univariate_parents(kv1, pattern[0]).items() if index.i1 in cols)
    c2 = sorted(r for r, cols in _univariate_parents(kv2, pattern[1]).items() if index.i2 in cols)
    return frozenset(MultiIndex(a, b) for a in c1 for b in c2)


# -----------------------------------------------------------------------------
# HB / THB bases
# -----------------------------------------------------------------------------


def active_functions(
    domains: RefinementDomains, pattern: tuple[int, int] = ZERO_FORM
) -> tuple[tuple[MultiIndex, ...], ...]:
    """Per level, functions with supp ⊆ Ω_ℓ and supp ⊄ Ω_{ℓ+1}, in flat order."""
    out = []
    for level in range(domains.max_level + 1):
        space = domains.tensor_space(level, pattern)
        if level == 0:
            candidates = frozenset(space.indices())
        else:
            candidates = contained_functions(domains, level, pattern, domains.omega(level))
        removed = contained_functions(domains, level, pattern)
        out.append(tuple(sorted(candidates - removed, key=space.flat_index)))
    return tuple(out)


@dataclass(frozen=True)
class HierarchicalBasis:
    """
    Active hierarchical functions of one form pattern.

    `embedding` has one column per active function (level 0 first, flat order
    within a level) holding its level-L coefficient vector. For THB the
    columns are the iterated truncations of their mothers.
    """

    domains: RefinementDomains
    pattern: tuple[int, int]
    variant: BasisVariant
    active: tuple[tuple[MultiIndex, ...], ...]
    embedding: SparseMatrix = field(repr=False)

    @cached_property
    def functions(self) -> tuple[tuple[int, MultiIndex], ...]:
        return tuple((level, index) for level, indices in enumerate(self.active) for index in indices)

    @cached_property
    def _columns(self) -> dict[tuple[int, MultiIndex], int]:
        return {key: k for k, key in enumerate(self.functions)}

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def max_level(self) -> int:
        return self.domains.max_level

    def column_of(self, level: int, index: MultiIndex) -> int:
        try:
            return self._columns[(level, MultiIndex(*index))]
        except KeyError:
            raise InactiveFunctionError(f"({level}, {tuple(index)}) is not active") from None

    def mother(self, level: int, index: MultiIndex) -> tuple[int, MultiIndex]:
        """Level and tensor index of the function a THB column was truncated from."""
        self.column_of(level, index)
        return level, MultiIndex(*index)

    def coefficients(self, level: int, index: MultiIndex) -> dict[int, Fraction]:
        """Level-L coefficient vector of one active function as {flat index: value}."""
        return self.embedding.column(self.column_of(level, index))

    @cached_property
    def row_pattern(self):
        """Boolean nonzero pattern of the embedding (level-L rows × active functions)."""
        return self.embedding.pattern()

    def finest_space(self) -> TensorSpace:
        return self.domains.tensor_space(self.max_level, self.pattern)


def _selection(space: TensorSpace, indices: Sequence[MultiIndex]) -> SparseMatrix:
    return SparseMatrix.from_entries(
        {(space.flat_index(index), k): 1 for k, index in enumerate(indices)},
        (space.dimension, len(indices)),
    )


def build_basis(
    domains: RefinementDomains,
    pattern: tuple[int, int] = ZERO_FORM,
    variant: BasisVariant = BasisVariant.THB,
) -> HierarchicalBasis:
    """
    Active set and level-L embedding of the HB or THB basis.

    **Input (request):**
        - domains: refinement domains.
        - pattern: form pattern 𝐣 ∈ {0,1}².
        - variant: BasisVariant.HB or BasisVariant.THB.

    **Output (response):** HierarchicalBasis with an exact rational embedding.
    """
    pattern = tuple(pattern)
    active = active_functions(domains, pattern)
    space = domains.tensor_space(0, pattern)
    columns = _selection(space, active[0])
    for level in range(domains.max_level):
        columns = tensor_subdivision(domains.base, level, pattern) @ columns
        if variant is BasisVariant.THB:
            columns = truncation_matrix(domains, level + 1, pattern) @ columns
        fine = domains.tensor_space(level + 1, pattern)
        columns = hstack([columns, _selection(fine, active[level + 1])])
    logger.debug(
        "Built %s basis for pattern %s: %s functions over %s levels",
        variant.value, pattern, columns.shape[1], domains.max_level + 1,
    )
    return HierarchicalBasis(domains, pattern, variant, active, columns)


def build_hb_basis(domains: RefinementDomains, pattern: tuple[int, int] = ZERO_FORM) -> HierarchicalBasis:
    return build_basis(domains, pattern, BasisVariant.HB)


def build_thb_basis(domains: RefinementDomains, pattern: tuple[int, int] = ZERO_FORM) -> HierarchicalBasis:
    return build_basis(domains, pattern, BasisVariant.THB)


def mother(basis: HierarchicalBasis, level: int, index: MultiIndex) -> tuple[int, MultiIndex]:
    return basis.mother(level, index)


@dataclass
class HierarchicalSpace:
    """Refinement domains plus the lazily built bases of every form pattern."""

    domains: RefinementDomains
    variant: BasisVariant = BasisVariant.THB
    _bases: dict = field(default_factory=dict, repr=False)

    def basis(self, pattern: tuple[int, int]) -> HierarchicalBasis:
        pattern = tuple(pattern)
        if pattern not in self._bases:
            self._bases[pattern] = build_basis(self.domains, pattern, self.variant)
        return self._bases[pattern]

    def mesh(self) -> tuple[ActiveElement, ...]:
        return hierarchical_mesh(self.domains)
