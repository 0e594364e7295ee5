"""Application settings loaded from environment."""

from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings. Loaded from .env and environment."""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8")

    API_V1_STR: str = "/api/v1"

    # CORS for the HTTP surface: comma-separated origins. Empty means localhost dev origins.
    CORS_ORIGINS: str = ""

    # Logging. An empty LOG_DIR keeps logging on the console only.
    LOG_DIR: str = "logs"
    LOG_LEVEL: str = "INFO"

    # Worker threads for pair checks (exactness scans). 1 disables the pool.
    HDR_THREADS: int = 1

    # ── Refinement / adaptivity ───────────────────────────────────────────────
    MAX_LEVEL: int = 6
    DORFLER_THETA: float = 0.06
    ADAPTIVE_MAX_STEPS: int = 6

    # ── Numerical tolerances (relative) ───────────────────────────────────────
    RANK_TOLERANCE: float = 1e-10
    EIGEN_ZERO_TOLERANCE: float = 1e-8
    SADDLE_PIVOT_TOLERANCE: float = 1e-10


@lru_cache
def get_settings() -> Settings:
    """Return cached application settings."""
    return Settings()
