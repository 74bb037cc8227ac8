"""Settings, search budgets and logging setup."""

from typing import Any
import os
import sys

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

LOG_LEVELS = ("error", "warning", "info", "debug", "trace")

ENV_LOG = "DENSIFY_LOG"
ENV_ASSERT_LEMMAS = "DENSIFY_ASSERT_LEMMAS"


class SearchBudget(BaseModel):
    """Limits for the backward prover."""

    model_config = ConfigDict(frozen=True)

    max_depth: int = Field(default=10, ge=0, description="Maximum number of backward rule applications on a branch")
    max_ec_per_branch: int = Field(default=2, ge=0, description="Maximum backward contractions on a branch")
    max_com_splits: int = Field(default=64, ge=1, description="Maximum partitions tried per branching rule")

    @model_validator(mode="before")
    @classmethod
    def validate_model(cls, values: Any) -> Any:
        if isinstance(values, dict):
            values = dict(values)
            for short, name in (("depth", "max_depth"), ("ec", "max_ec_per_branch"), ("splits", "max_com_splits")):
                if short in values:
                    values.setdefault(name, values.pop(short))
        return values

    def widened(self, depth: int) -> "SearchBudget":
        return self.model_copy(update={"max_depth": max(self.max_depth, depth)})


class SeparationBudget(BaseModel):
    """Limits for the separation searches of the pipeline."""

    model_config = ConfigDict(frozen=True)

    max_members: int = Field(default=512, ge=1, description="Index sets the separation driver may resolve")
    max_eliminations: int = Field(default=400, ge=1, description="Template applications in one descending loop")


class Settings(BaseModel):
    """Run-wide switches, usually read from the environment or the CLI."""

    log_level: str = "error"
    assert_lemmas: bool = False
    full_trace: bool = False
    pure_gl: bool = False
    search: SearchBudget = SearchBudget()
    separation: SeparationBudget = SeparationBudget()

    @model_validator(mode="before")
    @classmethod
    def validate_model(cls, values: Any) -> Any:
        if isinstance(values, dict) and "log_level" in values:
            level = str(values["log_level"]).lower()
            if level not in LOG_LEVELS:
                raise ValueError(f"Invalid log level: {values['log_level']}")
            values = {**values, "log_level": level}
        return values

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        values: dict[str, Any] = {}
        if os.getenv(ENV_LOG):
            values["log_level"] = os.getenv(ENV_LOG)
        if os.getenv(ENV_ASSERT_LEMMAS):
            values["assert_lemmas"] = os.getenv(ENV_ASSERT_LEMMAS, "").lower() in ("1", "true", "yes")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def setup_logging(level: str = "error") -> None:
    """Route densify logs to stderr at ``level``."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <7} | {name}: {message}")
    logger.enable("densify")
