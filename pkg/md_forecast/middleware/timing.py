"""Wall-clock timing: per-subcommand middleware and a sample collector.

TimingStats is also handed to `rollout()` to time individual forecast
windows; the numbers only ever reach the logs, never an artifact.
"""

import logging
import math
import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field

from md_forecast.middleware.base import CommandContext, CommandHandler, CommandMiddleware


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000


@dataclass
class TimingStats:
    """Durations in milliseconds, one sample per timed block."""

    samples_ms: list[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.samples_ms)

    @property
    def total_ms(self) -> float:
        return math.fsum(self.samples_ms)

    @property
    def avg_ms(self) -> float:
        return self.total_ms / self.count if self.samples_ms else 0.0

    @property
    def min_ms(self) -> float:
        return min(self.samples_ms, default=0.0)

    @property
    def max_ms(self) -> float:
        return max(self.samples_ms, default=0.0)

    def record(self, duration_ms: float) -> None:
        self.samples_ms.append(duration_ms)

    @contextmanager
    def measure(self) -> Iterator[None]:
        """Time the with-block; failures are recorded too."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record(_elapsed_ms(start))

    def summary(self) -> dict[str, float | int]:
        """count, total, mean and extremes, rounded to 0.01 ms."""
        return {
            "count": self.count,
            "total_ms": round(self.total_ms, 2),
            "avg_ms": round(self.avg_ms, 2),
            "min_ms": round(self.min_ms, 2),
            "max_ms": round(self.max_ms, 2),
        }


class TimingMiddleware(CommandMiddleware):
    """Times every subcommand and keeps the samples per command name.

    A command that takes `slow_threshold_ms` or longer is logged as a
    warning instead of at INFO.

    Example:
        >>> middleware = TimingMiddleware(slow_threshold_ms=60000.0)
        >>> middleware.get_timing_stats()["train"]["avg_ms"]
    """

    def __init__(
        self,
        logger: logging.Logger | None = None,
        slow_threshold_ms: float = 60000.0,
    ) -> None:
        super().__init__(logger=logger)
        self.slow_threshold_ms = slow_threshold_ms
        self._by_command: dict[str, TimingStats] = {}

    def _stats_for(self, command: str) -> TimingStats:
        return self._by_command.setdefault(command, TimingStats())

    def get_timing_stats(self) -> dict[str, dict[str, float | int]]:
        """Summaries keyed by command name."""
        return {name: stats.summary() for name, stats in self._by_command.items()}

    def reset_stats(self) -> None:
        self._by_command.clear()

    def on_command(self, context: CommandContext, call_next: CommandHandler) -> int:
        stats = self._stats_for(context.command)
        start = time.perf_counter()
        try:
            code = call_next(context)
        except Exception as e:
            elapsed = _elapsed_ms(start)
            stats.record(elapsed)
            # ErrorHandlingMiddleware reports the failure itself
            self.logger.debug("%s failed after %.2fms: %s", context.command, elapsed, e)
            raise

        elapsed = _elapsed_ms(start)
        stats.record(elapsed)
        if elapsed >= self.slow_threshold_ms:
            self.logger.warning(
                "%s slow: %.2fms (threshold %.0fms)",
                context.command,
                elapsed,
                self.slow_threshold_ms,
            )
        else:
            self.logger.info("%s completed in %.2fms, exit %d", context.command, elapsed, code)
        return code
