"""API v1 router aggregating all endpoint routers."""

from fastapi import APIRouter

from hdr.api.v1.endpoints import health, mesh

api_router = APIRouter()

api_router.include_router(health.router, prefix="/health", tags=["health"])
api_router.include_router(mesh.router)
