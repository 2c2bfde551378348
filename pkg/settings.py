"""
Runtime configuration for Heron.

Values come from the environment (prefix ``HERON_``) or a local ``.env`` file.
"""
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical tolerances and search resolutions."""

    model_config = SettingsConfigDict(env_prefix="HERON_", env_file=".env", extra="ignore")

    # Multistart solver
    grid_size: int = Field(default=16, gt=0)
    newton_tol: float = Field(default=1e-12, gt=0)
    accept_tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=50, gt=0)
    jacobian_step: float = Field(default=1e-7, gt=0)
    dedup_radius: float = Field(default=1e-6, gt=0)
    miss_threshold: float = Field(default=1e-6, gt=0)

    # Geometry
    fd_step: float = Field(default=1e-5, gt=0)
    chart_cap_epsilon: float = Field(default=1e-6, gt=0)
    incidence_tol: float = Field(default=1e-9, gt=0)
    grazing_tol: float = Field(default=1e-7, gt=0)

    # Oracle search
    oracle_resolution: int = Field(default=128, gt=1)

    log_level: str = "WARNING"


@lru_cache
def get_settings() -> Settings:
    """Cached settings instance."""
    return Settings()
