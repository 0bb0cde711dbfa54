"""
tempodag configuration
Environment-driven settings, numerical tolerances and logging setup
"""

import os
import sys
from typing import Literal

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ValidationError, field_validator

from .errors import InvalidArgument

load_dotenv()

# Numerical tolerances
PROBABILITY_TOLERANCE = 1e-12
MARGINAL_TOLERANCE = 1e-9
INDEPENDENCE_TOLERANCE = 1e-9
SINGULAR_TOLERANCE = 1e-12

# Report and search limits
WITNESS_CAP = 16
AUDIT_VARIABLE_CAP = 8
SAMPLING_CHUNK = 4096
CSV_FLOAT_FORMAT = "%.17g"

FORMAT_VERSION = "tempodag/1"

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {level} - {message}"
LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseModel):
    color: Literal["auto", "never", "always"] = "auto"
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value):
        value = value.upper()
        if value not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}")
        return value

    @classmethod
    def from_env(cls):
        """
        Read settings from the process environment (after .env loading)

        Returns:
            Settings: Current settings
        """
        try:
            return cls(
                color=os.getenv("TEMPODAG_COLOR", "auto").lower(),
                log_level=os.getenv("TEMPODAG_LOG_LEVEL", "WARNING"),
            )
        except ValidationError as error:
            fields = ", ".join(str(e["loc"][0]) for e in error.errors())
            raise InvalidArgument(f"invalid TEMPODAG_* environment setting: {fields}") from None

    def use_color(self, stream=None):
        if self.color == "always":
            return True
        if self.color == "never":
            return False
        stream = stream or sys.stdout
        return hasattr(stream, "isatty") and stream.isatty()


def configure_logging(level=None):
    """
    Install a single stderr sink for loguru

    Args:
        level (str): Log level; defaults to TEMPODAG_LOG_LEVEL
    """
    level = (level or Settings.from_env().log_level).upper()
    if level not in LOG_LEVELS:
        raise InvalidArgument(f"unknown log level {level!r}; expected one of {', '.join(LOG_LEVELS)}")
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)
    return level
