"""Base middleware classes for md-forecast subcommands."""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any


@dataclass
class CommandContext:
    """What a middleware sees about the subcommand being run."""

    command: str
    options: dict[str, Any] = field(default_factory=dict)


CommandHandler = Callable[[CommandContext], int]


class CommandMiddleware(ABC):
    """Base middleware wrapping a subcommand handler.

    Provides:
        - Configurable logger
        - The call_next chaining contract
    """

    def __init__(self, logger: logging.Logger | None = None) -> None:
        """Initialize middleware.

        Args:
            logger: Optional custom logger. Defaults to module logger.
        """
        self.logger = logger or logging.getLogger(__name__)

    @abstractmethod
    def on_command(self, context: CommandContext, call_next: CommandHandler) -> int:
        """Run the rest of the chain and return its exit code."""


def run_with_middleware(
    middlewares: Sequence[CommandMiddleware],
    context: CommandContext,
    handler: CommandHandler,
) -> int:
    """Run `handler` wrapped by `middlewares`, outermost first."""

    def wrap(index: int) -> CommandHandler:
        if index == len(middlewares):
            return handler
        middleware = middlewares[index]
        inner = wrap(index + 1)
        return lambda ctx: middleware.on_command(ctx, inner)

    return wrap(0)(context)
