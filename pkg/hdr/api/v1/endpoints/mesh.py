"""Mesh endpoints: run a check on a mesh document, refine a mesh document."""

import asyncio
import logging
from functools import partial
from typing import Optional

from fastapi import APIRouter
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from hdr.core.enums import BasisVariant, CheckKind, ScalarMode
from hdr.schemas.mesh import MarkSet, MeshDocument
from hdr.schemas.reports import CheckResult, RefineSummary
from hdr.schemas.response import ApiResponse, rejection_response, success_response
from hdr.services.mesh_io import DOMAIN_ERRORS, document_to_domains, domains_to_document, refine_domains, run_check

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/mesh", tags=["mesh"])


# ── Request / response schemas ─────────────────────────────────────────────────


class CheckRequest(BaseModel):
    """A mesh document and the check to run on it."""

    document: MeshDocument
    what: CheckKind = Field(CheckKind.PAIRS, description="pairs | cohomology | admissibility | assumption1")
    mode: ScalarMode = Field(ScalarMode.RATIONAL, description="Arithmetic for cohomology ranks.")
    variant: BasisVariant = Field(BasisVariant.THB, description="Basis variant for cohomology / admissibility.")


class RefineRequest(BaseModel):
    """A mesh document plus marks. Marks default to the document's own."""

    document: MeshDocument
    marks: Optional[MarkSet] = None
    exact: bool = Field(True, description="Run exact refinement (repairs problematic pairs).")
    admissible_class: Optional[int] = Field(None, ge=2, description="Admissibility closure class.")


class RefineResponse(BaseModel):
    document: MeshDocument
    summary: RefineSummary


def _rejected(exc: Exception) -> JSONResponse:
    logger.info("Rejected mesh request: %s", exc)
    return JSONResponse(status_code=422, content=rejection_response(exc).model_dump(mode="json"))


def _check(body: CheckRequest) -> CheckResult:
    domains = document_to_domains(body.document)
    return run_check(domains, body.what, body.mode, body.variant)


def _refine(body: RefineRequest) -> RefineResponse:
    domains = document_to_domains(body.document)
    marks = body.marks if body.marks is not None else body.document.marks()
    refined, summary = refine_domains(
        domains, marks, exact=body.exact, admissible_class=body.admissible_class
    )
    return RefineResponse(document=domains_to_document(refined), summary=summary)


# ── Endpoints ──────────────────────────────────────────────────────────────────


@router.post(
    "/check",
    response_model=ApiResponse[CheckResult],
    summary="Check a mesh document",
    description=(
        "Runs one of the checks (problematic pairs, cohomology, admissibility, Assumption 1). "
        "`data.clean` is false when the check found something."
    ),
)
async def check_mesh(body: CheckRequest):
    loop = asyncio.get_event_loop()
    try:
        result = await loop.run_in_executor(None, partial(_check, body))
    except DOMAIN_ERRORS as exc:
        return _rejected(exc)
    return success_response(data=result)


@router.post(
    "/refine",
    response_model=ApiResponse[RefineResponse],
    summary="Refine a mesh document",
    description=(
        "Refines the marked elements (or marked function supports) of a document. With `exact` "
        "the result has no problematic pairs; corners and promoted parents are listed in the summary."
    ),
)
async def refine_mesh_document(body: RefineRequest):
    loop = asyncio.get_event_loop()
    try:
        result = await loop.run_in_executor(None, partial(_refine, body))
    except DOMAIN_ERRORS as exc:
        return _rejected(exc)
    return success_response(data=result)
