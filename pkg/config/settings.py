"""Configuration settings for CWSSNet"""

import logging
from pydantic import field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Process-level settings using Pydantic for validation"""

    # Application Settings
    APP_NAME: str = "CWSSNet"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "logs/cwssnet.log"

    # Compute Settings
    CWSSNET_THREADS: int = 1
    DEFAULT_DTYPE: str = "float64"

    # Output Settings
    OUTPUT_DIR: str = "runs"

    @field_validator('LOG_LEVEL')
    def validate_log_level(cls, v):
        level = str(v).upper().strip()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f'Unknown log level: {v}')
        return level

    @field_validator('CWSSNET_THREADS', mode='before')
    def parse_threads(cls, v):
        if v is None or v == "":
            return 1
        value = int(v)
        if value < 1:
            raise ValueError('CWSSNET_THREADS must be at least 1')
        return value

    @field_validator('DEFAULT_DTYPE')
    def validate_dtype(cls, v):
        if v not in ("float64", "float32"):
            raise ValueError('DEFAULT_DTYPE must be float64 or float32')
        return v

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True
        extra = "ignore"


# Global settings instance
settings = Settings()
