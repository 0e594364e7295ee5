"""
Problematic-pair detection and exact mesh refinement.

A pair of level-ℓ 0-form B-splines supported in Ω_{ℓ+1} is problematic when
their closed supports share a minimal (ℓ+1)-intersection but no shortest
chain of such B-splines joins them. exact_refine refines marked elements and
then closes every problematic pair with an L-chain (by refining its corner),
level by level from the finest down, repairing nestedness through parent
functions on the way.
"""

import logging
from bisect import bisect_left, bisect_right
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Iterable, Mapping, Optional

from hdr.core.config import get_settings
from hdr.core.constants import ZERO_FORM
from hdr.core.enums import ResolvedRule
from hdr.core.logging_config import REFINE_LOGGER_NAME
from hdr.models.hierarchy import (
    RefinementDomains,
    check_assumption1,
    contained_functions,
    greedy_generators,
    parents,
    refine_mesh,
    support_elements,
)
from hdr.models.tensor import Element, MultiIndex, TensorSpace

logger = logging.getLogger(__name__)
refine_logger = logging.getLogger(REFINE_LOGGER_NAME)

Pair = tuple[MultiIndex, MultiIndex]


class NotComparableError(ValueError):
    """Raised when the closed supports of a pair do not intersect."""

    def __init__(self, first: MultiIndex, second: MultiIndex):
        super().__init__(f"closed supports of {tuple(first)} and {tuple(second)} are disjoint (not comparable)")
        self.pair = (first, second)


class CornerPreconditionError(ValueError):
    """Raised when an L-chain corner is requested for a pair aligned in some direction."""


class ExactRefineError(ValueError):
    """Raised when exact_refine input or output breaks its contract."""

    def __init__(self, reason: str, details: Optional[dict] = None):
        super().__init__(reason)
        self.reason = reason
        self.details = details or {}


def canonical_pair(first: MultiIndex, second: MultiIndex) -> Pair:
    first, second = MultiIndex(*first), MultiIndex(*second)
    return (first, second) if first <= second else (second, first)


# -----------------------------------------------------------------------------
# Level context and interaction boxes
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelPairContext:
    """B⁰_{ℓ,ℓ+1} of one level, recomputed whenever Ω_{ℓ+1} changes."""

    domains: RefinementDomains
    level: int
    members: frozenset[MultiIndex]

    @classmethod
    def build(cls, domains: RefinementDomains, level: int) -> "LevelPairContext":
        return cls(domains, level, contained_functions(domains, level))

    @cached_property
    def space(self) -> TensorSpace:
        return self.domains.tensor_space(self.level, ZERO_FORM)

    @cached_property
    def fine_knots(self) -> tuple:
        return self.domains.knot_vectors(self.level + 1)

    def degree(self, k: int) -> int:
        return self.domains.base[k - 1].degree

    def box_radius(self, k: int) -> int:
        return self.degree(k) + 1

    def within_box(self, center: MultiIndex, other: MultiIndex) -> bool:
        return all(abs(center.component(k) - other.component(k)) <= self.box_radius(k) for k in (1, 2))

    def interaction_box(self, *centers: MultiIndex) -> "InteractionBox":
        """N_𝐢 for one center, N_{𝐢,𝐣} = N_𝐢 ∩ N_𝐣 for two."""
        centers = tuple(MultiIndex(*c) for c in centers)
        r1, r2 = self.box_radius(1), self.box_radius(2)
        first = centers[0]
        candidates = (
            MultiIndex(a, b)
            for b in range(first.i2 - r2, first.i2 + r2 + 1)
            for a in range(first.i1 - r1, first.i1 + r1 + 1)
        )
        nodes = frozenset(
            m for m in candidates if m in self.members and all(self.within_box(c, m) for c in centers)
        )
        return InteractionBox(centers, nodes)

    def with_region(self, extra: Iterable[Element]) -> frozenset[MultiIndex]:
        """B⁰_{ℓ,ℓ+1} after hypothetically adding level-ℓ elements to Ω_{ℓ+1}."""
        region = self.domains.refined_at(self.level) | frozenset(extra)
        return contained_functions(self.domains, self.level, ZERO_FORM, region)


@dataclass(frozen=True)
class InteractionBox:
    """Induced lattice subgraph on the members of an interaction box."""

    centers: tuple[MultiIndex, ...]
    nodes: frozenset[MultiIndex]

    def neighbours(self, node: MultiIndex) -> list[MultiIndex]:
        steps = (node.shift(1, 1), node.shift(1, -1), node.shift(2, 1), node.shift(2, -1))
        return [s for s in steps if s in self.nodes]

    def adjacency(self) -> dict[MultiIndex, list[MultiIndex]]:
        return {node: self.neighbours(node) for node in sorted(self.nodes)}

    def has_path(self, source: MultiIndex, target: MultiIndex) -> bool:
        if source not in self.nodes or target not in self.nodes:
            return False
        visited = {source}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            if node == target:
                return True
            for nxt in self.neighbours(node):
                if nxt not in visited:
                    visited.add(nxt)
                    queue.append(nxt)
        return False


# -----------------------------------------------------------------------------
# Pair checks
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class PairReport:
    level: int
    first: MultiIndex
    second: MultiIndex
    has_minimal_intersection: bool
    # None when the chain check was not needed
    has_shortest_chain: Optional[bool] = None

    @property
    def problematic(self) -> bool:
        return self.has_minimal_intersection and self.has_shortest_chain is False

    @property
    def pair(self) -> Pair:
        return self.first, self.second


def _count_knots(knots: tuple, lo, hi) -> int:
    return bisect_right(knots, hi) - bisect_left(knots, lo)


def has_minimal_intersection(ctx: LevelPairContext, first: MultiIndex, second: MultiIndex) -> bool:
    """
    Whether the closed supports share a minimal (ℓ+1)-intersection.

    Per direction, the level-(ℓ+1) knots (with multiplicity) inside the closed
    support intersection are counted; the pair qualifies when any count
    exceeds the level-(ℓ+1) degree.
    """
    s_first = ctx.space.support(MultiIndex(*first))
    s_second = ctx.space.support(MultiIndex(*second))
    flags = []
    for k in (0, 1):
        overlap = s_first.factors[k].closure_intersection(s_second.factors[k])
        if overlap is None:
            raise NotComparableError(first, second)
        count = _count_knots(ctx.fine_knots[k].knots, *overlap)
        flags.append(count > ctx.fine_knots[k].degree)
    return any(flags)


def has_shortest_chain(ctx: LevelPairContext, first: MultiIndex, second: MultiIndex) -> bool:
    """Direction-k chains are implied for aligned pairs; otherwise BFS inside N_{𝐢,𝐣}."""
    first, second = MultiIndex(*first), MultiIndex(*second)
    if first.i1 == second.i1 or first.i2 == second.i2:
        assert ctx.within_box(first, second), f"aligned pair {first}, {second} is not box-local"
        return True
    return ctx.interaction_box(first, second).has_path(first, second)


def is_problematic(ctx: LevelPairContext, first: MultiIndex, second: MultiIndex) -> PairReport:
    first, second = canonical_pair(first, second)
    if not has_minimal_intersection(ctx, first, second):
        return PairReport(ctx.level, first, second, False)
    return PairReport(ctx.level, first, second, True, has_shortest_chain(ctx, first, second))


def is_resolved(ctx: LevelPairContext, index: MultiIndex, k: int) -> bool:
    """Every valid side neighbour 𝐢 ± δ_k lies in B⁰_{ℓ,ℓ+1}."""
    index = MultiIndex(*index)
    sides = (index.shift(k, -1), index.shift(k, 1))
    return all(s in ctx.members for s in sides if ctx.space.is_valid(s))


def is_skipped(ctx: LevelPairContext, index: MultiIndex, rule: ResolvedRule) -> bool:
    resolved = [is_resolved(ctx, index, k) for k in (1, 2)]
    return all(resolved) if rule is ResolvedRule.BOTH_DIRECTIONS else any(resolved)


def get_local_pairs(
    ctx: LevelPairContext,
    seeds: Iterable[MultiIndex],
    rule: ResolvedRule = ResolvedRule.ANY_DIRECTION,
) -> set[Pair]:
    """Pairs of each seed with the unresolved members of its interaction box (no self-pairs)."""
    pairs: set[Pair] = set()
    for seed in seeds:
        seed = MultiIndex(*seed)
        for other in ctx.interaction_box(seed).nodes:
            if other != seed and not is_skipped(ctx, other, rule):
                pairs.add(canonical_pair(seed, other))
    return pairs


def initiate_pairs(
    ctx: LevelPairContext,
    marked: Iterable[Element],
    rule: ResolvedRule = ResolvedRule.ANY_DIRECTION,
) -> set[Pair]:
    """Local pairs of the unresolved members whose closed support meets a marked element."""
    marked = frozenset(Element(*e) for e in marked)
    if not marked:
        return set()
    seeds = []
    for index in sorted(ctx.members):
        if is_skipped(ctx, index, rule):
            continue
        box = ctx.space.box(index)
        if any(_closures_meet(box, e) for e in marked):
            seeds.append(index)
    return get_local_pairs(ctx, seeds, rule)


def _closures_meet(box, element: Element) -> bool:
    return box.first1 - 1 <= element.e1 <= box.last1 + 1 and box.first2 - 1 <= element.e2 <= box.last2 + 1


def get_lchain_corner(
    ctx: LevelPairContext,
    first: MultiIndex,
    second: MultiIndex,
    rule: ResolvedRule = ResolvedRule.ANY_DIRECTION,
) -> MultiIndex:
    """
    Corner of the L-chain that resolves the most members.

    Each candidate corner's support is added to Ω_{ℓ+1} hypothetically and the
    members resolved under `rule` are counted; ties go to the smaller corner.
    """
    first, second = MultiIndex(*first), MultiIndex(*second)
    if first.i1 == second.i1 or first.i2 == second.i2:
        raise CornerPreconditionError(f"pair {tuple(first)}, {tuple(second)} is aligned; no L-chain corner needed")
    best: Optional[tuple[int, MultiIndex]] = None
    for corner in sorted({MultiIndex(first.i1, second.i2), MultiIndex(second.i1, first.i2)}):
        members = ctx.with_region(ctx.space.box(corner).elements())
        trial = LevelPairContext(ctx.domains, ctx.level, members)
        score = sum(1 for m in members if is_skipped(trial, m, rule))
        if best is None or score > best[0]:
            best = (score, corner)
    return best[1]


def _evaluate(ctx: LevelPairContext, pairs: Iterable[Pair]) -> list[PairReport]:
    ordered = sorted(canonical_pair(*p) for p in pairs)
    threads = max(1, get_settings().HDR_THREADS)
    check = partial(_check_pair, ctx)
    if threads == 1 or len(ordered) < 2 * threads:
        return [check(p) for p in ordered]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(check, ordered))


def _check_pair(ctx: LevelPairContext, pair: Pair) -> PairReport:
    try:
        return is_problematic(ctx, *pair)
    except NotComparableError:
        return PairReport(ctx.level, pair[0], pair[1], False)


def scan_level(ctx: LevelPairContext) -> list[PairReport]:
    """Reports for all member pairs whose closed supports intersect."""
    pairs = set()
    for index in ctx.members:
        for other in ctx.interaction_box(index).nodes:
            if other != index:
                pairs.add(canonical_pair(index, other))
    return _evaluate(ctx, pairs)


def find_problematic_pairs(domains: RefinementDomains, level: Optional[int] = None) -> list[PairReport]:
    """
    Exhaustive scan for problematic pairs.

    **Input (request):**
        - domains: refinement domains.
        - level: one level ℓ, or None for every level 0..L−1.

    **Output (response):** problematic PairReports, sorted by level then pair.
    """
    levels = range(domains.max_level) if level is None else [level]
    found: list[PairReport] = []
    for lvl in levels:
        found.extend(r for r in scan_level(LevelPairContext.build(domains, lvl)) if r.problematic)
    return found


# -----------------------------------------------------------------------------
# L-chain bookkeeping for the containment shortcut
# -----------------------------------------------------------------------------


@dataclass
class ChainRegistry:
    """L-chains created so far at one level; pairs lying on linked chains need no check."""

    chains: list[tuple[Pair, frozenset[MultiIndex]]] = field(default_factory=list)

    @staticmethod
    def lattice_points(first: MultiIndex, corner: MultiIndex, second: MultiIndex) -> frozenset[MultiIndex]:
        points = set()
        for a, b in ((first, corner), (corner, second)):
            for i1 in range(min(a.i1, b.i1), max(a.i1, b.i1) + 1):
                for i2 in range(min(a.i2, b.i2), max(a.i2, b.i2) + 1):
                    points.add(MultiIndex(i1, i2))
        return frozenset(points)

    def record(self, ctx: LevelPairContext, first: MultiIndex, corner: MultiIndex, second: MultiIndex) -> None:
        points = self.lattice_points(first, corner, second)
        if points <= ctx.members:
            self.chains.append(((first, second), points))

    def _linked(self, a: int, b: int) -> bool:
        if a == b:
            return True
        (ends_a, pts_a), (ends_b, pts_b) = self.chains[a], self.chains[b]
        return any(e in pts_b for e in ends_a) or any(e in pts_a for e in ends_b)

    def covers(self, first: MultiIndex, second: MultiIndex) -> bool:
        on_first = [k for k, (_, pts) in enumerate(self.chains) if first in pts]
        on_second = [k for k, (_, pts) in enumerate(self.chains) if second in pts]
        return any(self._linked(a, b) for a in on_first for b in on_second)


# -----------------------------------------------------------------------------
# Exact refinement
# -----------------------------------------------------------------------------


def is_supported_on(domains: RefinementDomains, level: int, region: frozenset[Element], index: MultiIndex) -> bool:
    """Whether the support of a level-ℓ 0-form lies in the level-(ℓ−1) element set `region`."""
    box = domains.tensor_space(level, ZERO_FORM).box(MultiIndex(*index))
    return all(e in region for e in box.coarsen(1).elements())


def get_a_parent_func(
    domains: RefinementDomains,
    level: int,
    index: MultiIndex,
    region: Optional[Iterable[Element]] = None,
) -> MultiIndex:
    """
    Parent whose support adds the fewest new level-(ℓ−1) elements.

    `region` is the set already refined (or scheduled) at level ℓ−1; ties go
    to the lexicographically smaller parent.
    """
    region = domains.refined_at(level - 1) if region is None else frozenset(region)
    candidates = parents(domains, level, MultiIndex(*index))
    if not candidates:
        raise ExactRefineError("function has no parent", {"level": level, "index": tuple(index)})
    coarse = domains.tensor_space(level - 1, ZERO_FORM)

    def cost(parent: MultiIndex) -> tuple[int, MultiIndex]:
        return sum(1 for e in coarse.box(parent).elements() if e not in region), parent

    return min(candidates, key=cost)


@dataclass(frozen=True)
class ExactRefinement:
    domains: RefinementDomains
    corners: dict[int, tuple[MultiIndex, ...]]
    parents: dict[int, tuple[MultiIndex, ...]]

    @property
    def max_level(self) -> int:
        return self.domains.max_level


def _validate_input(domains: RefinementDomains, marked: Mapping[int, frozenset[Element]]) -> None:
    violations = check_assumption1(domains)
    if violations:
        raise ExactRefineError(
            "input domains violate Assumption 1", {"levels": [v.level for v in violations]}
        )
    problematic = find_problematic_pairs(domains)
    if problematic:
        raise ExactRefineError(
            "input mesh has problematic pairs",
            {"pairs": [(r.level, tuple(r.first), tuple(r.second)) for r in problematic]},
        )
    for level, elements in marked.items():
        if level < 0 or level > domains.max_level:
            raise ExactRefineError("marked level out of range", {"level": level, "max_level": domains.max_level})
        omega = domains.omega(level)
        outside = sorted(e for e in elements if not domains.is_element(level, e) or e not in omega)
        if outside:
            raise ExactRefineError("marked elements lie outside Ω_ℓ", {"level": level, "elements": outside})
        trial = domains.with_refined(level, elements)
        covered = support_elements(trial, level, contained_functions(trial, level))
        loose = sorted(set(elements) - covered)
        if loose:
            raise ExactRefineError(
                "marked elements are not a union of 0-form supports", {"level": level, "elements": loose}
            )


def exact_refine(
    domains: RefinementDomains,
    marked: Mapping[int, Iterable[Element]],
    *,
    admissible_class: Optional[int] = None,
    resolved_rule: ResolvedRule = ResolvedRule.ANY_DIRECTION,
    use_containment: bool = False,
    verify: bool = True,
) -> ExactRefinement:
    """
    Refine marked elements and repair every problematic pair.

    **Input (request):**
        - domains: satisfies Assumption 1 and has no problematic pairs.
        - marked: level → level-ℓ elements inside Ω_ℓ, each level a union of 0-form supports.
        - admissible_class: when set (≥ 2), run the admissibility closure after each level.
        - resolved_rule: skip filter used when seeding pairs.
        - use_containment: skip pairs lying on linked L-chains created in this call.
        - verify: exhaustive scan after each level's local loop.

    **Output (response):** ExactRefinement with the new domains, the corners added per
    level and the parents promoted per level. L* is L or L+1.
    """
    marked = {lvl: frozenset(Element(*e) for e in els) for lvl, els in marked.items() if els}
    if admissible_class is not None and admissible_class < 2:
        raise ExactRefineError("admissible class must be at least 2", {"class": admissible_class})
    _validate_input(domains, marked)
    if not marked:
        return ExactRefinement(domains, {}, {})

    from hdr.services.admissibility import admissibility_marks

    current = domains
    top = max(marked)
    scheduled: dict[int, set[Element]] = {lvl: set(els) for lvl, els in marked.items()}
    pending: dict[int, set[MultiIndex]] = {}
    corners_added: dict[int, tuple[MultiIndex, ...]] = {}
    parents_added: dict[int, list[MultiIndex]] = {}
    changed: set[int] = set()

    for level in range(top, -1, -1):
        marks = frozenset(scheduled.get(level, ()))
        before = current.refined_at(level)
        current = refine_mesh(current, level, marks, strict=False)
        ctx = LevelPairContext.build(current, level)
        pairs = initiate_pairs(ctx, marks, resolved_rule)
        registry = ChainRegistry()
        level_corners: set[MultiIndex] = set()
        refine_logger.info(
            "Level %s: %s marked element(s), %s member(s), %s seed pair(s)",
            level, len(marks), len(ctx.members), len(pairs),
        )

        while True:
            while pairs:
                if use_containment:
                    pairs = {p for p in pairs if not registry.covers(*p)}
                problematic = [r for r in _evaluate(ctx, pairs) if r.problematic]
                if not problematic:
                    break
                chosen: list[tuple[PairReport, MultiIndex]] = []
                for report in problematic:
                    corner = get_lchain_corner(ctx, report.first, report.second, resolved_rule)
                    chosen.append((report, corner))
                    refine_logger.info(
                        "Level %s: pair %s-%s problematic, corner %s",
                        level, tuple(report.first), tuple(report.second), tuple(corner),
                    )
                new_corners = {corner for _, corner in chosen}
                current = refine_mesh(
                    current, level, support_elements(current, level, new_corners), strict=False
                )
                ctx = LevelPairContext.build(current, level)
                if use_containment:
                    for report, corner in chosen:
                        registry.record(ctx, report.first, corner, report.second)
                pairs = get_local_pairs(ctx, new_corners, resolved_rule)
                level_corners |= new_corners
            if not verify:
                break
            missed = [r for r in scan_level(ctx) if r.problematic]
            if not missed:
                break
            refine_logger.warning("Level %s: verification scan found %s missed pair(s)", level, len(missed))
            logger.warning("Verification scan at level %s found %s missed problematic pair(s)", level, len(missed))
            pairs = {r.pair for r in missed}

        if level_corners:
            corners_added[level] = tuple(sorted(level_corners))

        new_elements = current.refined_at(level) - before
        if new_elements:
            changed.add(level)
        if admissible_class is not None and new_elements:
            for k, functions in admissibility_marks(current, level, new_elements, admissible_class).items():
                elements = support_elements(current, k, functions)
                scheduled.setdefault(k, set()).update(elements)
                pending.setdefault(k, set()).update(functions)
                refine_logger.info(
                    "Level %s: admissibility closure marks %s function(s) at level %s", level, len(functions), k
                )

        if level == 0:
            continue
        region = set(current.refined_at(level - 1)) | scheduled.get(level - 1, set())
        for func in sorted(level_corners | pending.get(level, set())):
            if is_supported_on(current, level, frozenset(region), func):
                continue
            parent = get_a_parent_func(current, level, func, region)
            elements = set(current.tensor_space(level - 1, ZERO_FORM).box(parent).elements())
            region |= elements
            scheduled.setdefault(level - 1, set()).update(elements)
            pending.setdefault(level - 1, set()).add(parent)
            parents_added.setdefault(level - 1, []).append(parent)
            refine_logger.info(
                "Level %s: %s leaves Ω_%s, promoting parent %s", level, tuple(func), level, tuple(parent)
            )

    for level in sorted(changed):
        current = current.with_generators(level, greedy_generators(current, level))

    if verify:
        violations = check_assumption1(current)
        if violations:
            raise ExactRefineError(
                "output violates Assumption 1", {"levels": [v.level for v in violations]}
            )
    refine_logger.info(
        "Exact refinement done: L* = %s, %s corner(s), %s parent(s)",
        current.max_level,
        sum(len(c) for c in corners_added.values()),
        sum(len(p) for p in parents_added.values()),
    )
    return ExactRefinement(
        current, corners_added, {lvl: tuple(sorted(set(p))) for lvl, p in parents_added.items()}
    )
