"""
Brute-force references for the pair checks and the hierarchical mesh.

Slow on purpose: every check enumerates what the production code decides
combinatorially.
"""

from fractions import Fraction

from hdr.core.constants import ZERO_FORM
from hdr.models.hierarchy import ActiveElement, RefinementDomains
from hdr.models.tensor import Element, MultiIndex


def shortest_chain_exists(members: frozenset[MultiIndex], first: MultiIndex, second: MultiIndex) -> bool:
    """Any unit-step index sequence of length Σ|Δ_k| from first to second inside members."""
    steps = (
        (1 if second.i1 > first.i1 else -1, 0),
        (0, 1 if second.i2 > first.i2 else -1),
    )

    def walk(node: MultiIndex) -> bool:
        if node not in members:
            return False
        if node == second:
            return True
        for d1, d2 in steps:
            if (d1 and node.i1 == second.i1) or (d2 and node.i2 == second.i2):
                continue
            if walk(MultiIndex(node.i1 + d1, node.i2 + d2)):
                return True
        return False

    return walk(first)


def minimal_intersection(domains: RefinementDomains, level: int, first: MultiIndex, second: MultiIndex) -> bool:
    """Some direction holds p+1 consecutive level-(ℓ+1) knots inside the closed support intersection."""
    space = domains.tensor_space(level, ZERO_FORM)
    fine = domains.knot_vectors(level + 1)
    a, b = space.support(first), space.support(second)
    for k in (0, 1):
        lo = max(a.factors[k].lo, b.factors[k].lo)
        hi = min(a.factors[k].hi, b.factors[k].hi)
        knots = fine[k].knots
        p = fine[k].degree
        for start in range(len(knots) - p):
            window = knots[start:start + p + 1]
            if lo <= window[0] and window[-1] <= hi:
                return True
    return False


def active_elements(domains: RefinementDomains) -> set[ActiveElement]:
    """Descend from every level-0 element through refined elements."""
    out: set[ActiveElement] = set()

    def visit(level: int, element: Element) -> None:
        if element in domains.refined_at(level):
            for child in element.children():
                visit(level + 1, child)
        else:
            out.add(ActiveElement(level, element))

    for element in domains.mesh(0).elements():
        visit(0, element)
    return out


def mesh_area(domains: RefinementDomains, cells) -> Fraction:
    total = Fraction(0)
    for cell in cells:
        (x0, x1), (y0, y1) = domains.mesh(cell.level).rectangle(cell.element)
        total += (x1 - x0) * (y1 - y0)
    return total
