from pydantic_settings import BaseSettings
from functools import lru_cache
import logging

class Settings(BaseSettings):

    LOG_LEVEL: str = "INFO"

    # Thread count for BLAS and for the acceptance-suite worker pool
    HOPF_FLOW_THREADS: int = 1

    # Numerics
    DIFFERENTIATION: str = "stencil"
    UNIT_TOLERANCE: float = 1e-9
    MIN_NODES: int = 16
    QUASI_UNIFORM_RATIO: float = 10.0
    # Unit chains are renormalized after this many products
    RENORMALIZE_EVERY: int = 8

    # Bound checks
    BOUND_SLACK: float = 1e-9
    BOUND_RELATIVE_SLACK: float = 1e-6

    class Config:
        env_file = ".env"
        case_sensitive = True
        env_prefix = ""
        extra = "ignore"

@lru_cache()
def get_settings() -> Settings:
    return Settings()

def get_log_level(log_level: str) -> int:
    log_level = log_level.upper()
    if log_level == 'DEBUG':
        return logging.DEBUG
    return getattr(logging, log_level, logging.INFO)
