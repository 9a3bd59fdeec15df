import os

try:
    from pydantic_settings import BaseSettings, SettingsConfigDict
except ImportError:
    from pydantic import BaseSettings

    SettingsConfigDict = None

from pydantic import field_validator

from typing import Optional, Union


class Settings(BaseSettings):
    # App Info
    APP_NAME: str = "bootlab"
    APP_VERSION: str = "1.0"

    # Parallelism
    # Worker cap for Monte Carlo campaigns; None means machine parallelism
    BOOTLAB_THREADS: Optional[int] = None

    @field_validator("BOOTLAB_THREADS", mode="before")
    @classmethod
    def assemble_threads(cls, v: Union[str, int, None]) -> Optional[int]:
        if v is None:
            return None
        if isinstance(v, str):
            v = v.strip().lower()
            if v in ("", "max", "auto"):
                return None
            v = int(v)
        if int(v) < 1:
            raise ValueError(f"BOOTLAB_THREADS must be >= 1 (got {v})")
        return int(v)

    CHUNK_SIZE: int = 16

    # Observability
    LOG_LEVEL: str = "INFO"
    LOG_TO_FILE: bool = False
    LOG_DIR: str = "logs"

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = str(v).strip().upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown LOG_LEVEL: {v}")
        return level

    # Numerics
    DEFAULT_TOL: float = 1e-8
    TABLE_TOL: float = 1e-9
    QUAD_LIMIT: int = 200
    QUAD_RETRIES: int = 3

    @field_validator("DEFAULT_TOL", "TABLE_TOL")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        if not (0.0 < v < 1.0):
            raise ValueError(f"Tolerance must lie in (0, 1), got {v}")
        return v

    # Limits
    MAX_CELLS: int = 2**31

    # Monte Carlo
    DEFAULT_SEED: int = 20240101

    if SettingsConfigDict:
        model_config = SettingsConfigDict(
            env_file=".env", case_sensitive=True, extra="ignore"
        )
    else:

        class Config:
            env_file = ".env"
            case_sensitive = True

    @property
    def worker_count(self) -> int:
        """Effective number of worker processes."""
        return self.BOOTLAB_THREADS or (os.cpu_count() or 1)


settings = Settings()
