"""
Configuration management module
"""
import os
from typing import Optional


class Settings:
    """Application configuration class"""

    # Basic application configuration
    APP_NAME: str = "msalg"
    APP_VERSION: str = "1.0.0"
    APP_DESCRIPTION: str = "Finite many-sorted algebra engine: limits, ultraproducts and retractions"
    REPORT_SCHEMA: int = 1

    # Logging configuration
    LOG_LEVEL: str = os.getenv("MSALG_LOG_LEVEL", "WARNING")
    LOG_FORMAT: str = os.getenv("MSALG_LOG_FORMAT", "json")  # json or text
    LOG_FILE: Optional[str] = os.getenv("MSALG_LOG_FILE")  # Optional log file path

    # Monitoring configuration
    ENABLE_METRICS: bool = os.getenv("MSALG_ENABLE_METRICS", "true").lower() == "true"

    # Search caps
    MAX_ISO_SEARCH: int = int(os.getenv("MSALG_MAX_ISO_SEARCH", "1000000"))
    HOM_ENUM_CAP: int = int(os.getenv("MSALG_HOM_ENUM_CAP", "1000000"))
    FILTER_GROUND_CAP: int = int(os.getenv("MSALG_FILTER_GROUND_CAP", "16"))

    # Check runner configuration
    CHECK_WORKERS: int = int(os.getenv("MSALG_CHECK_WORKERS", "4"))


# Global configuration instance
settings = Settings()
