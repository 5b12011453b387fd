#!/usr/bin/env python3

"""This module contains the process-wide settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Defines the defaults shared by every command and service."""

    # app variables
    app_name: str = "maskfk"
    log_level: str = "INFO"

    # state-space enumeration
    enumeration_limit: int = 2**20

    # reverse-time simulation
    t_min: float = 1e-3
    default_schedule: str = "linear"
    threads: int = 1

    # verification
    oracle_tolerance: float = 1e-3
    oracle_grid: int = 2000
    oracle_method: str = "radau"
    oracle_state_limit: int = 4096
    oracle_rtol: float = 1e-9
    oracle_atol: float = 1e-12
    stiffness_limit: float = 0.05
    max_substeps: int = 10000

    # artifacts
    summary_schema_version: str = "1.0"

    model_config = SettingsConfigDict(env_prefix="MASKFK_", env_file=".env")


settings = Settings()
