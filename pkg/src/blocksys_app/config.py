# src/blocksys_app/config.py
from __future__ import annotations

import os

from pydantic import BaseModel, Field

# Seed used by every randomized operation unless the caller passes one.
DEFAULT_SEED = 2006


class Settings(BaseModel):
    """Process-wide defaults; every value can be overridden per call or per CLI run."""

    seed: int = DEFAULT_SEED
    enum_budget: int = Field(default=2**24, ge=1)
    exhaustive_bits: int = Field(default=16, ge=1, le=16)
    group_action_bits: int = Field(default=14, ge=1, le=16)
    sample_size: int = Field(default=2**16, ge=1)
    sampled_seed_count: int = Field(default=32, ge=1)
    log_level: str = "INFO"


def load_settings() -> Settings:
    """
    Reads settings from BLOCKSYS_* environment variables.
    Unset variables keep the documented defaults.
    """
    env = os.environ
    values: dict[str, str] = {}
    for name in Settings.model_fields:
        raw = env.get(f"BLOCKSYS_{name.upper()}")
        if raw is not None:
            values[name] = raw
    return Settings.model_validate(values)


settings = load_settings()
