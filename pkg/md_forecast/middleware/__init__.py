"""md-forecast command middleware components."""

from md_forecast.middleware.base import (
    CommandContext,
    CommandHandler,
    CommandMiddleware,
    run_with_middleware,
)
from md_forecast.middleware.errors import ErrorHandlingMiddleware, exit_code_for
from md_forecast.middleware.timing import TimingMiddleware, TimingStats

__all__ = [
    "CommandContext",
    "CommandHandler",
    "CommandMiddleware",
    "ErrorHandlingMiddleware",
    "TimingMiddleware",
    "TimingStats",
    "exit_code_for",
    "run_with_middleware",
]
