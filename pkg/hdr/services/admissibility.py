"""
H- and T-admissibility classes of hierarchical spaces and the propagation
of the 0-form class to the 1- and 2-forms.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from hdr.core.constants import FORM_PATTERNS
from hdr.core.enums import BasisVariant, BoundaryMode
from hdr.models.hierarchy import (
    ActiveElement,
    Assumption1Violation,
    HierarchicalSpace,
    RefinementDomains,
    check_assumption1,
    hierarchical_mesh,
)
from hdr.models.tensor import Element, ElementBox, MultiIndex

logger = logging.getLogger(__name__)


class CofaceError(ValueError):
    """Raised when a co-face is requested in a direction where the pattern is already 1."""


class AssumptionViolationError(ValueError):
    """Raised when a check needs Assumption 1 and the domains break it."""

    def __init__(self, violations: list[Assumption1Violation]):
        levels = sorted({v.level for v in violations})
        super().__init__(f"Assumption 1 violated at level(s) {levels}")
        self.violations = violations


@dataclass(frozen=True)
class ClassResult:
    form: int
    value: int
    witness: Optional[ActiveElement]


@dataclass(frozen=True)
class AdmissibilityReport:
    variant: BasisVariant
    classes: dict[int, int]
    witnesses: dict[int, Optional[ActiveElement]]

    @property
    def propagates(self) -> bool:
        return self.classes[1] <= self.classes[0] and self.classes[2] <= self.classes[0]


def _hb_levels(space: HierarchicalSpace, pattern: tuple[int, int], cell: ActiveElement) -> set[int]:
    basis = space.basis(pattern)
    levels = set()
    for k in range(cell.level + 1):
        active = set(basis.active[k]) if k < len(basis.active) else set()
        if not active:
            continue
        ancestor = cell.element.ancestor(cell.level - k)
        tensor = space.domains.tensor_space(k, pattern)
        if any(f in active for f in tensor.functions_on(ancestor)):
            levels.add(k)
    return levels


def _thb_levels(space: HierarchicalSpace, pattern: tuple[int, int], cell: ActiveElement) -> set[int]:
    basis = space.basis(pattern)
    finest = basis.finest_space()
    depth = basis.max_level - cell.level
    rows = set()
    for e in ElementBox(cell.element.e1, cell.element.e1, cell.element.e2, cell.element.e2).refine(depth).elements():
        rows.update(finest.flat_index(f) for f in finest.functions_on(e))
    if not rows:
        return set()
    columns = np.unique(basis.row_pattern[sorted(rows)].indices)
    return {basis.functions[c][0] for c in columns}


def admissibility_class(
    domains: RefinementDomains, form: int, variant: BasisVariant = BasisVariant.HB,
    space: Optional[HierarchicalSpace] = None,
) -> ClassResult:
    """
    Class m_j = max over active elements of (max level − min level + 1).

    **Input (request):**
        - domains: refinement domains.
        - form: j ∈ {0, 1, 2}; j = 1 joins both 1-form blocks.
        - variant: HB decides "non-vanishing" by mother support containment,
          THB by the nonzero pattern of the truncated level-L coefficients.

    **Output (response):** ClassResult with the class and the first element attaining it.
    """
    space = space or HierarchicalSpace(domains, variant)
    levels_of = _hb_levels if variant is BasisVariant.HB else _thb_levels
    best = ClassResult(form, 0, None)
    for cell in hierarchical_mesh(domains):
        levels: set[int] = set()
        for pattern in FORM_PATTERNS[form]:
            levels |= levels_of(space, pattern, cell)
        if not levels:
            continue
        value = max(levels) - min(levels) + 1
        if value > best.value:
            best = ClassResult(form, value, cell)
    return best


def admissibility_report(domains: RefinementDomains, variant: BasisVariant = BasisVariant.HB) -> AdmissibilityReport:
    space = HierarchicalSpace(domains, variant)
    results = {form: admissibility_class(domains, form, variant, space) for form in (0, 1, 2)}
    logger.debug("Admissibility classes (%s): %s", variant.value, {f: r.value for f, r in results.items()})
    return AdmissibilityReport(
        variant, {f: r.value for f, r in results.items()}, {f: r.witness for f, r in results.items()}
    )


def check_propagation(domains: RefinementDomains, m: int, variant: BasisVariant = BasisVariant.HB) -> bool:
    """(class of 0-forms ≤ m) ⟹ (classes of 1- and 2-forms ≤ m)."""
    violations = check_assumption1(domains)
    if violations:
        raise AssumptionViolationError(violations)
    report = admissibility_report(domains, variant)
    if report.classes[0] > m:
        return True
    return report.classes[1] <= m and report.classes[2] <= m


def coface_splines(
    domains: RefinementDomains, level: int, pattern: tuple[int, int], index: MultiIndex, k: int
) -> set[tuple[tuple[int, int], MultiIndex]]:
    """
    Co-faces (𝐣 + δ_k, 𝐢 + c·δ_k), c ∈ {0, 1}, clipped to the target index range.

    In Open mode the 1-form index range starts one lower, so c runs over {−1, 0}.
    """
    if pattern[k - 1] == 1:
        raise CofaceError(f"pattern {tuple(pattern)} has no co-face in direction {k}")
    target = (pattern[0] + 1, pattern[1]) if k == 1 else (pattern[0], pattern[1] + 1)
    space = domains.tensor_space(level, target)
    shift = -1 if domains.base[k - 1].boundary_mode is BoundaryMode.OPEN else 0
    index = MultiIndex(*index)
    out = set()
    for c in (0, 1):
        candidate = index.shift(k, c + shift)
        if space.is_valid(candidate):
            out.add((target, candidate))
    return out


def coface_support_violations(
    domains: RefinementDomains, pattern: tuple[int, int] = (0, 0)
) -> list[tuple[int, MultiIndex, MultiIndex]]:
    """Active functions with a co-face whose support is not inside theirs (expected empty)."""
    space = HierarchicalSpace(domains, BasisVariant.HB)
    out = []
    for level, indices in enumerate(space.basis(pattern).active):
        source = domains.tensor_space(level, pattern)
        for index in indices:
            rect = source.support(index).rectangle
            for k in (1, 2):
                if pattern[k - 1] == 1:
                    continue
                for target, coface in coface_splines(domains, level, pattern, index, k):
                    other = domains.tensor_space(level, target).support(coface).rectangle
                    inside = all(rect[d][0] <= other[d][0] and other[d][1] <= rect[d][1] for d in (0, 1))
                    if not inside:
                        out.append((level, index, coface))
    return out


def admissibility_marks(
    domains: RefinementDomains, level: int, new_elements: Iterable[Element], m: int
) -> dict[int, set[MultiIndex]]:
    """
    Functions whose supports must be refined to keep class m after refining level-ℓ elements.

    For each new element Q, the level-(ℓ+1−m) 0-forms non-vanishing on Q whose
    support is not yet in Ω_{ℓ+2−m}. The H-closure also bounds the T-class.
    """
    k = level + 1 - m
    if k < 0:
        return {}
    tensor = domains.tensor_space(k, (0, 0))
    refined = domains.refined_at(k)
    out: set[MultiIndex] = set()
    for element in new_elements:
        ancestor = Element(*element).ancestor(level - k)
        for f in tensor.functions_on(ancestor):
            if not all(e in refined for e in tensor.box(f).elements()):
                out.add(f)
    return {k: out} if out else {}
