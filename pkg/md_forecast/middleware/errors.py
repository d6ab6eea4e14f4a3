"""Exception-to-exit-code middleware.

Config and input problems exit 1, failures while computing exit 2,
commands that finished with some failed items exit 3.
"""

import logging
import traceback
from collections import Counter
from collections.abc import Callable

from md_forecast.exceptions import EXIT_RUNTIME, MDForecastError, PartialFailure
from md_forecast.middleware.base import CommandContext, CommandHandler, CommandMiddleware

ErrorCallback = Callable[[Exception, CommandContext], None]


def exit_code_for(error: BaseException) -> int:
    """Exit code for an exception: its category code, or 2 if unexpected."""
    if isinstance(error, MDForecastError):
        return error.exit_code
    return EXIT_RUNTIME


class ErrorHandlingMiddleware(CommandMiddleware):
    """Outermost middleware: no exception escapes a subcommand.

    Partial failures are logged as warnings with the failed items; every
    other exception is logged as an error, with the traceback only when
    `include_traceback` is set. `error_callback(exc, context)` runs after
    logging; if it raises, that is logged and ignored.

    Example:
        >>> middleware = ErrorHandlingMiddleware(include_traceback=True)
        >>> code = run_with_middleware([middleware], context, handler)
    """

    def __init__(
        self,
        logger: logging.Logger | None = None,
        include_traceback: bool = False,
        error_callback: ErrorCallback | None = None,
    ) -> None:
        super().__init__(logger=logger)
        self.include_traceback = include_traceback
        self.error_callback = error_callback
        self._seen: Counter[str] = Counter()

    def get_error_stats(self) -> dict[str, int]:
        """How often each exception type was caught."""
        return dict(self._seen)

    def reset_stats(self) -> None:
        self._seen.clear()

    def _report(self, error: Exception, command: str) -> None:
        name = type(error).__name__
        if isinstance(error, PartialFailure):
            self.logger.warning(
                "%s partially failed: %s (%d failed: %s)",
                command,
                error,
                len(error.failed),
                ", ".join(error.failed),
            )
            return
        message = f"{command} failed with {name}: {error}"
        if self.include_traceback:
            message += "\n" + traceback.format_exc().rstrip()
        self.logger.error(message)

    def on_command(self, context: CommandContext, call_next: CommandHandler) -> int:
        try:
            return call_next(context)
        except Exception as e:
            self._seen[type(e).__name__] += 1
            self._report(e, context.command)
            if self.error_callback is not None:
                try:
                    self.error_callback(e, context)
                except Exception as hook_error:
                    self.logger.warning("error_callback raised %r; ignored", hook_error)
            return exit_code_for(e)
