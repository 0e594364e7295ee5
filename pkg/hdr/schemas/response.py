"""Response envelope shared by the HTTP endpoints."""

from typing import Any, Generic, Optional, TypeVar

from pydantic import BaseModel

from hdr.core.enums import ApiResponseMessage

T = TypeVar("T")


class ApiResponse(BaseModel, Generic[T]):
    """
    status 1 with message "success" and the payload in data, or status 0 with
    the reason in message and, for rejected meshes, the offending levels,
    elements or pairs in data.
    """

    status: int
    message: str
    data: Optional[T] = None


def success_response(data: Any = None, message: str = ApiResponseMessage.SUCCESS.value) -> ApiResponse[Any]:
    return ApiResponse(status=1, message=message, data=data)


def error_response(message: str, data: Any = None) -> ApiResponse[Any]:
    return ApiResponse(status=0, message=message, data=data)


def rejection_response(exc: Exception) -> ApiResponse[Any]:
    """Envelope for a domain error; the `details` of an ExactRefineError are merged into data."""
    details = getattr(exc, "details", None)
    data = {"error": type(exc).__name__, **details} if details else {"error": type(exc).__name__}
    return error_response(str(exc), data)
