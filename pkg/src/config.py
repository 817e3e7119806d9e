"""
Configuration module for the qubit-controller thermal-stability twin.
Loads deployment-specific settings from the environment / .env file.

Note: Physical defaults, reference values and message templates are in constants.py.
Scenario parameters live in the scenario YAML files, not here.
"""

from pydantic_settings import BaseSettings
from pydantic import Field

from src.constants import DEFAULT_FIDELITY_BUDGET


class Settings(BaseSettings):
    """
    Process settings loaded from environment variables.
    Only contains values that vary per machine or per invocation environment.
    """

    # Output locations
    output_dir: str = Field(default="runs", description="Default directory for run outputs")
    default_scenario: str = Field(
        default="scenarios/default.yaml",
        description="Scenario file used when --scenario is omitted"
    )

    # Reporting
    fidelity_budget: float = Field(
        default=DEFAULT_FIDELITY_BUDGET,
        description="Per-channel infidelity above which a channel is flagged"
    )
    envelope_dump_max_rows: int = Field(
        default=10_000_000,
        description="Row count above which an envelope dump is refused unless forced"
    )
    progress_interval_rounds: int = Field(
        default=10_000,
        description="Measurement rounds between campaign progress log events"
    )

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    log_format: str = Field(default="console", description="Log format (json or console)")

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False


# Global settings instance
settings = Settings()
