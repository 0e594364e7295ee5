"""Health endpoint."""

from fastapi import APIRouter

from hdr import __version__
from hdr.schemas.response import ApiResponse, success_response

router = APIRouter()


@router.get("", response_model=ApiResponse[dict[str, str]])
async def health() -> ApiResponse[dict[str, str]]:
    """Liveness check with the package version."""
    return success_response(data={"status": "ok", "version": __version__})
