"""Pydantic schemas: mesh documents, report views and the API envelope."""

from hdr.schemas.response import ApiResponse, error_response, success_response

__all__ = ["ApiResponse", "error_response", "success_response"]
