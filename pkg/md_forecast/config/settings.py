"""Process settings from environment variables.

Centralized MDF_* environment variable parsing and validation. These knobs
never change results, only how a run is logged and scheduled.
"""

import logging
import os
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class Settings:
    """Process settings from environment.

    Defaults apply when a variable is unset or malformed.
    """

    # Logging
    log_level: str = field(default="INFO")
    log_colors: bool = field(default=True)
    include_traceback: bool = field(default=False)
    slow_threshold_ms: int = field(default=60_000)

    # Scheduling
    max_workers: int = field(default=1)
    torch_threads: int = field(default=1)

    @classmethod
    def from_env(cls) -> "Settings":
        """Read every MDF_* variable; unset or invalid ones keep their default."""
        return cls(
            log_level=cls._get_log_level(),
            log_colors=cls._get_bool("MDF_LOG_COLORS", True),
            include_traceback=cls._get_bool("MDF_INCLUDE_TRACEBACK", False),
            slow_threshold_ms=cls._get_int("MDF_SLOW_THRESHOLD_MS", 60_000),
            max_workers=cls._get_int("MDF_MAX_WORKERS", 1, minimum=1),
            torch_threads=cls._get_int("MDF_TORCH_THREADS", 1, minimum=1),
        )

    @staticmethod
    def _get_int(key: str, default: int, minimum: int = 0) -> int:
        """Integer `key`, or `default` when unset, unparsable or below `minimum`."""
        value = os.getenv(key)
        if value is None:
            return default
        try:
            parsed = int(value)
        except ValueError:
            logger.warning("%s=%r is not an integer; keeping %d", key, value, default)
            return default
        if parsed < minimum:
            logger.warning("%s=%d is below %d, using default %d", key, parsed, minimum, default)
            return default
        return parsed

    @staticmethod
    def _get_bool(key: str, default: bool) -> bool:
        # Anything but 1/true/yes/on counts as false.
        value = os.getenv(key)
        if value is None:
            return default
        return value.lower() in ("1", "true", "yes", "on")

    @staticmethod
    def _get_log_level() -> str:
        """Get log level from environment with validation."""
        level = os.getenv("MDF_LOG_LEVEL", "INFO").upper()
        if level in _LOG_LEVELS:
            return level
        logger.warning("Invalid MDF_LOG_LEVEL %s, using INFO", level)
        return "INFO"
