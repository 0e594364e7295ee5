"""HTTP entry point and FastAPI app factory."""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from hdr import __version__
from hdr.api.v1.router import api_router
from hdr.core.config import get_settings
from hdr.core.logging_config import setup_logging

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events (startup/shutdown)."""
    # Startup: configure logging (app.log + refine.log)
    setup_logging()
    logger.info("hdr API %s starting", __version__)
    yield
    # Shutdown


_default_cors_origins = [
    "http://localhost:5173",
    "http://127.0.0.1:5173",
]


def _get_cors_origins() -> list[str]:
    """Return list of allowed CORS origins from settings or default dev list."""
    settings = get_settings()
    if settings.CORS_ORIGINS.strip():
        return [o.strip() for o in settings.CORS_ORIGINS.split(",") if o.strip()]
    return _default_cors_origins


def create_app() -> FastAPI:
    settings = get_settings()
    application = FastAPI(
        title="Hierarchical de Rham API",
        version=__version__,
        description="Exactness checks and exact refinement of hierarchical B-spline meshes.",
        lifespan=lifespan,
    )
    application.add_middleware(
        CORSMiddleware,
        allow_origins=_get_cors_origins(),
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    application.include_router(api_router, prefix=settings.API_V1_STR)
    return application


app = create_app()
