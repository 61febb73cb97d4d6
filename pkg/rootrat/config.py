"""
Configuration management for rootrat.
Loads search bounds and logging settings from environment variables with validation.
"""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_prefix="ROOTRAT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Configuration
    app_name: str = Field(default="rootrat", description="Application Name")
    app_version: str = Field(default="1.0.0", description="Application Version")

    # Point Search Configuration
    height: int = Field(
        default=6,
        description="Height bound for small rational candidates",
        ge=1,
        le=50,
    )
    scan_limit: int = Field(
        default=64,
        description="Candidates per chart in the small-height scan",
        ge=0,
    )
    solve_limit: int = Field(
        default=200,
        description="Assignments per solved variable in the conic ladder",
        ge=1,
    )
    elimination_degree_cap: int = Field(
        default=12,
        description="Groebner basis degree above which the solver gives up",
        ge=2,
    )

    # Strategy Configuration
    fdecomp_depth: int = Field(
        default=2,
        description="Nested F-decomposition depth",
        ge=0,
        le=5,
    )
    max_orderings: int = Field(
        default=6,
        description="Root orderings tried in simultaneous mode",
        ge=1,
    )
    output_prefix: str = Field(default="t", description="Default output variable prefix")

    # Timeout Configuration (seconds)
    timeout: float = Field(default=60.0, description="Per-call search timeout", gt=0)

    # Logging Configuration
    log_level: str = Field(default="WARNING", description="Log Level")
    log_to_file: bool = Field(default=False, description="Write rotating log files")
    log_file_path: str = Field(default="./logs/rootrat.log", description="Log File Path")
    log_rotation: str = Field(default="10 MB", description="Log Rotation Size")
    log_retention: str = Field(default="30 days", description="Log Retention Period")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()

    @field_validator("output_prefix")
    @classmethod
    def validate_output_prefix(cls, v):
        """Output names must stay valid identifiers of the expression grammar"""
        if not v or not v[0].isalpha() or not v.replace("_", "a").isalnum():
            raise ValueError("output_prefix must start with a letter")
        return v


def get_settings() -> Settings:
    """Get application settings"""
    return Settings()


def ensure_directories(current: Settings = None):
    """Ensure the log directory exists when file logging is enabled"""
    current = current or get_settings()
    if current.log_to_file:
        Path(current.log_file_path).parent.mkdir(parents=True, exist_ok=True)


# Create settings instance
settings = get_settings()

# Ensure directories exist
ensure_directories(settings)
