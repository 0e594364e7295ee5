"""
Mesh documents ↔ refinement domains, document-level drivers (refine, check)
and the CSV / SVG writers used by the CLI and the experiment scripts.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import matplotlib
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from hdr.core.constants import EXPECTED_BETTI
from hdr.core.enums import BasisVariant, CheckKind, ScalarMode
from hdr.models.hierarchy import (
    RefinementDomains,
    check_assumption1,
    greedy_generators,
    hierarchical_mesh,
    refine_mesh,
    support_elements,
)
from hdr.models.tensor import Element, MultiIndex
from hdr.models.univariate import KnotVector
from hdr.schemas.mesh import MarkSet, MeshDocument
from hdr.schemas.reports import (
    AdmissibilityView,
    Assumption1View,
    CheckResult,
    CohomologyView,
    PairView,
    RefineSummary,
)
from hdr.services.admissibility import admissibility_report
from hdr.services.derham import ComplexPropertyError, build_complex, cohomology
from hdr.services.exactness import exact_refine, find_problematic_pairs
from hdr.services.solvers import SolverError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Errors reported to users as bad input (CLI exit 2, HTTP 422); ValidationError is a ValueError
DOMAIN_ERRORS: tuple[type[Exception], ...] = (ValueError, IndexError, KeyError, ComplexPropertyError, SolverError)


# -----------------------------------------------------------------------------
# Documents
# -----------------------------------------------------------------------------


def document_to_domains(document: MeshDocument, *, validate: bool = True) -> RefinementDomains:
    """
    Build refinement domains from a document.

    Ω_{ℓ+1} is the explicit element list when present, otherwise the union of the
    generator supports. Assumption 1 violations are logged, not raised.
    """
    (p1, p2), (n1, n2) = document.degrees, document.intervals
    base = (
        KnotVector.uniform(p1, n1, document.boundary_mode),
        KnotVector.uniform(p2, n2, document.boundary_mode),
    )
    domains = RefinementDomains(base)
    for level in range(document.levels):
        listed = document.generators[level] if level < len(document.generators) else []
        generators = [MultiIndex(*g) for g in listed]
        if document.refined_elements is not None:
            elements = document.refined_elements[level]
        else:
            elements = support_elements(domains, level, generators)
        domains = domains.with_refined(level, elements, generators)
    if validate:
        for violation in check_assumption1(domains):
            logger.warning(
                "Document violates Assumption 1 at level %s (%s uncovered, %s not nested)",
                violation.level, len(violation.uncovered), len(violation.not_nested),
            )
    return domains


def _scalar_or_pair(values: tuple[int, int]) -> Union[int, tuple[int, int]]:
    return values[0] if values[0] == values[1] else values


def domains_to_document(domains: RefinementDomains, marks: Optional[MarkSet] = None) -> MeshDocument:
    """Document for domains; explicit element lists are written only when generators do not reproduce Ω."""
    generators = []
    explicit = False
    for level in range(domains.max_level):
        gens = domains.generators_at(level) or greedy_generators(domains, level)
        if support_elements(domains, level, gens) != set(domains.refined_at(level)):
            explicit = True
        generators.append(sorted(tuple(g) for g in gens))
    refined = (
        [sorted(tuple(e) for e in domains.refined_at(level)) for level in range(domains.max_level)]
        if explicit
        else None
    )
    marks = marks or MarkSet()
    return MeshDocument(
        degree=_scalar_or_pair(domains.degrees),
        base_intervals=_scalar_or_pair(tuple(kv.breakpoints.num_intervals for kv in domains.base)),
        boundary_mode=domains.boundary_mode,
        levels=domains.max_level,
        generators=generators,
        refined_elements=refined,
        marked=marks.marked,
        marked_functions=marks.marked_functions,
    )


def load_document(path: PathLike) -> MeshDocument:
    return MeshDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))


def save_document(document: MeshDocument, path: PathLike) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(document.model_dump_json(by_alias=True, exclude_none=True, indent=2) + "\n", encoding="utf-8")
    return out


def load_marks(path: PathLike) -> MarkSet:
    """Marks from a bare mark file or from the marks of a full mesh document."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and "degree" in data:
        return MeshDocument.model_validate(data).marks()
    return MarkSet.model_validate(data)


def marked_elements(domains: RefinementDomains, marks: MarkSet) -> dict[int, set[Element]]:
    """Level → marked elements, including the supports of marked functions."""
    out: dict[int, set[Element]] = {}
    for level, elements in marks.marked.items():
        out.setdefault(level, set()).update(Element(*e) for e in elements)
    for level, functions in marks.marked_functions.items():
        indices = [MultiIndex(*f) for f in functions]
        out.setdefault(level, set()).update(support_elements(domains, level, indices))
    return {level: elements for level, elements in out.items() if elements}


# -----------------------------------------------------------------------------
# Drivers
# -----------------------------------------------------------------------------


def refine_domains(
    domains: RefinementDomains,
    marks: MarkSet,
    *,
    exact: bool = True,
    admissible_class: Optional[int] = None,
) -> tuple[RefinementDomains, RefineSummary]:
    """
    Apply marks with exact_refine (exact) or plain refine_mesh.

    **Input (request):**
        - domains: current refinement domains.
        - marks: marked elements and marked function supports per level.
        - exact: run exact_refine; otherwise refine the marks as given.
        - admissible_class: admissibility closure class (exact only).

    **Output (response):** (new domains, RefineSummary). Plain refinement reports the
    problematic pairs left in the result.
    """
    marked = marked_elements(domains, marks)
    if exact:
        result = exact_refine(domains, marked, admissible_class=admissible_class)
        return result.domains, RefineSummary.from_refinement(result)
    if admissible_class is not None:
        raise ValueError("the admissibility closure needs exact refinement")
    current = domains
    for level in sorted(marked):
        current = refine_mesh(
            current, level, marked[level], strict=True, generators=marks.marked_functions.get(level, ())
        )
    for level in sorted(marked):
        if level < current.max_level and not marks.marked_functions.get(level):
            current = current.with_generators(level, greedy_generators(current, level))
    problematic = len(find_problematic_pairs(current))
    summary = RefineSummary(
        exact=False, max_level=current.max_level, problematic_pairs=problematic, h1_risk=problematic > 0
    )
    if problematic:
        logger.warning("Plain refinement left %s problematic pair(s)", problematic)
    return current, summary


def run_check(
    domains: RefinementDomains,
    what: CheckKind,
    mode: ScalarMode = ScalarMode.RATIONAL,
    variant: BasisVariant = BasisVariant.THB,
) -> CheckResult:
    """Run one check and wrap it as a CheckResult (clean is False on any finding)."""
    if what is CheckKind.PAIRS:
        pairs = find_problematic_pairs(domains)
        return CheckResult(what=what, clean=not pairs, report=[PairView.from_report(r).model_dump() for r in pairs])
    if what is CheckKind.COHOMOLOGY:
        report = cohomology(build_complex(domains, variant, mode))
        expected = EXPECTED_BETTI[domains.boundary_mode.value]
        payload = CohomologyView.from_report(report).model_dump(mode="json")
        payload["expected"] = list(expected)
        return CheckResult(what=what, clean=report.betti == expected, report=payload)
    if what is CheckKind.ADMISSIBILITY:
        view = AdmissibilityView.from_report(admissibility_report(domains, variant))
        return CheckResult(what=what, clean=view.propagates, report=view.model_dump(mode="json"))
    violations = check_assumption1(domains)
    return CheckResult(
        what=what,
        clean=not violations,
        report=[Assumption1View.from_violation(v).model_dump() for v in violations],
    )


# -----------------------------------------------------------------------------
# CSV / SVG
# -----------------------------------------------------------------------------


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return out


def render_svg(domains: RefinementDomains, path: PathLike) -> int:
    """
    Draw the hierarchical mesh, one rectangle per active element shaded by level.

    Each rectangle carries the SVG id "element-{level}-{e1}-{e2}". Returns the
    number of rectangles drawn.
    """
    cells = hierarchical_mesh(domains)
    cmap = matplotlib.colormaps["Blues"]
    top = max(domains.max_level, 1)
    fig = Figure(figsize=(6, 6))
    ax = fig.add_subplot(1, 1, 1)
    for cell in cells:
        (x0, x1), (y0, y1) = domains.mesh(cell.level).rectangle(cell.element)
        ax.add_patch(
            Rectangle(
                (float(x0), float(y0)),
                float(x1 - x0),
                float(y1 - y0),
                facecolor=cmap(0.15 + 0.7 * cell.level / top),
                edgecolor="black",
                linewidth=0.4,
                gid=f"element-{cell.level}-{cell.element.e1}-{cell.element.e2}",
            )
        )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_title(f"hierarchical mesh, L = {domains.max_level}, {len(cells)} elements")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg")
    logger.info("Wrote %s active elements to %s", len(cells), out)
    return len(cells)
