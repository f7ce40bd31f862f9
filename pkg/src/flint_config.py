"""
Toolchain configuration
Values come from the environment (optionally a .env file); command-line flags
override them
"""

import logging
import os
from dataclasses import dataclass
from typing import Mapping, Optional

OUTPUT_FORMATS = ("human", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class FlintConfig:
    format: str = "human"
    gas_table: Optional[str] = None
    gas_limit: Optional[int] = None
    log_level: str = "WARNING"
    no_stdlib: bool = False

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "FlintConfig":
        """Read FLINT_* variables; raises ValueError on malformed values"""
        environ = os.environ if environ is None else environ
        config = cls(
            format=environ.get("FLINT_FORMAT", "human").strip().lower() or "human",
            gas_table=environ.get("FLINT_GAS_TABLE") or None,
            log_level=environ.get("FLINT_LOG_LEVEL", "WARNING").strip().upper() or "WARNING",
            no_stdlib=_flag(environ.get("FLINT_NO_STDLIB", "0"), "FLINT_NO_STDLIB"),
        )
        limit = environ.get("FLINT_GAS_LIMIT", "").strip()
        if limit:
            if not limit.isdigit():
                raise ValueError(f"FLINT_GAS_LIMIT must be a non-negative integer, got '{limit}'")
            config.gas_limit = int(limit)
        config.validate()
        return config

    def validate(self):
        if self.format not in OUTPUT_FORMATS:
            raise ValueError(f"Output format must be one of {', '.join(OUTPUT_FORMATS)}, got '{self.format}'")
        if self.log_level not in LOG_LEVELS:
            raise ValueError(f"Log level must be one of {', '.join(LOG_LEVELS)}, got '{self.log_level}'")
        if self.gas_limit is not None and self.gas_limit < 0:
            raise ValueError("Gas limit cannot be negative")

    def configure_logging(self):
        logging.basicConfig(level=getattr(logging, self.log_level),
                            format="%(levelname)s %(name)s: %(message)s")


def _flag(value: str, name: str) -> bool:
    text = value.strip().lower()
    if text in ("1", "true", "yes"):
        return True
    if text in ("", "0", "false", "no"):
        return False
    raise ValueError(f"{name} must be 0 or 1, got '{value}'")
