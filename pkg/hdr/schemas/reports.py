"""JSON views of check, refinement and solver reports (CLI stdout and HTTP payloads)."""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict

from hdr.core.enums import BasisVariant, CheckKind, ScalarMode
from hdr.models.hierarchy import Assumption1Violation
from hdr.schemas.mesh import IndexPair
from hdr.services.admissibility import AdmissibilityReport
from hdr.services.derham import CohomologyReport
from hdr.services.exactness import ExactRefinement, PairReport
from hdr.services.solvers import EigenResult, LaplaceResult


class PairView(BaseModel):
    """One problematic pair of level-ℓ 0-forms."""

    level: int
    first: IndexPair
    second: IndexPair
    has_minimal_intersection: bool
    has_shortest_chain: Optional[bool] = None

    @classmethod
    def from_report(cls, report: PairReport) -> "PairView":
        return cls(
            level=report.level,
            first=tuple(report.first),
            second=tuple(report.second),
            has_minimal_intersection=report.has_minimal_intersection,
            has_shortest_chain=report.has_shortest_chain,
        )


class CohomologyView(BaseModel):
    h0: int
    h1: int
    h2: int
    rank_grad: int
    rank_curl: int
    dims: tuple[int, int, int]
    mode: ScalarMode

    @classmethod
    def from_report(cls, report: CohomologyReport) -> "CohomologyView":
        return cls(
            h0=report.h0, h1=report.h1, h2=report.h2,
            rank_grad=report.rank_grad, rank_curl=report.rank_curl,
            dims=report.dims, mode=report.mode,
        )


class AdmissibilityView(BaseModel):
    variant: BasisVariant
    classes: dict[int, int]
    # (level, e1, e2) of an active element attaining each class
    witnesses: dict[int, Optional[tuple[int, int, int]]]
    propagates: bool

    @classmethod
    def from_report(cls, report: AdmissibilityReport) -> "AdmissibilityView":
        witnesses = {
            form: (cell.level, *cell.element) if cell is not None else None
            for form, cell in report.witnesses.items()
        }
        return cls(
            variant=report.variant, classes=report.classes, witnesses=witnesses, propagates=report.propagates
        )


class Assumption1View(BaseModel):
    level: int
    uncovered: list[IndexPair]
    not_nested: list[IndexPair]
    stale_generators: list[IndexPair]

    @classmethod
    def from_violation(cls, violation: Assumption1Violation) -> "Assumption1View":
        return cls(
            level=violation.level,
            uncovered=sorted(tuple(e) for e in violation.uncovered),
            not_nested=sorted(tuple(e) for e in violation.not_nested),
            stale_generators=sorted(tuple(g) for g in violation.stale_generators),
        )


class CheckResult(BaseModel):
    """Envelope of `hdr check`: clean is False when the report contains a finding."""

    model_config = ConfigDict(use_enum_values=True)

    what: CheckKind
    clean: bool
    report: Any


class RefineSummary(BaseModel):
    exact: bool
    max_level: int
    corners: dict[int, list[IndexPair]] = {}
    parents: dict[int, list[IndexPair]] = {}
    problematic_pairs: int = 0
    # problematic pairs left behind: spurious harmonic fields expected
    h1_risk: bool = False

    @classmethod
    def from_refinement(cls, result: ExactRefinement) -> "RefineSummary":
        return cls(
            exact=True,
            max_level=result.max_level,
            corners={lvl: [tuple(c) for c in cs] for lvl, cs in result.corners.items()},
            parents={lvl: [tuple(p) for p in ps] for lvl, ps in result.parents.items()},
        )


class LaplaceSummary(BaseModel):
    solution: str
    dofs: tuple[int, int, int]
    l2_error: float
    curl_error: float
    singular: bool
    residual: float

    @classmethod
    def from_result(cls, name: str, dofs: tuple[int, int, int], result: LaplaceResult) -> "LaplaceSummary":
        return cls(
            solution=name,
            dofs=dofs,
            l2_error=result.l2_error,
            curl_error=result.curl_error,
            singular=result.singular,
            residual=result.residual,
        )


class MaxwellSummary(BaseModel):
    dofs: int
    zero_count: int
    zero_threshold: float
    first_nonzero: list[float]
    spurious: list[float]
    max_residual: float

    @classmethod
    def from_result(
        cls, dofs: int, result: EigenResult, spurious: list[float], count: int = 8
    ) -> "MaxwellSummary":
        return cls(
            dofs=dofs,
            zero_count=result.zero_count,
            zero_threshold=result.zero_threshold,
            first_nonzero=[float(v) for v in result.nonzero[:count]],
            spurious=[float(v) for v in spurious],
            max_residual=result.max_residual,
        )
