"""Console log formatting for md-forecast runs.

Lines look like

    14:02:11.503 10/18 | INFO     | services.forecaster    | epoch 3: ...

with the level, the component (logger name minus the package prefix) and
a few message tokens colored when the stream is a terminal.
"""

import logging
import re
from datetime import datetime

RESET = "\033[0m"
DIM = "\033[2m"

_ANSI = {
    "red": "\033[31m",
    "green": "\033[32m",
    "yellow": "\033[33m",
    "blue": "\033[34m",
    "magenta": "\033[35m",
    "cyan": "\033[36m",
    "white": "\033[37m",
    "grey": "\033[90m",
    "light_red": "\033[91m",
    "light_green": "\033[92m",
    "light_yellow": "\033[93m",
    "light_blue": "\033[94m",
    "light_magenta": "\033[95m",
    "light_cyan": "\033[96m",
}

LEVEL_STYLES = {
    "DEBUG": _ANSI["grey"],
    "INFO": _ANSI["light_green"],
    "WARNING": _ANSI["light_yellow"],
    "ERROR": _ANSI["light_red"],
    "CRITICAL": "\033[1m\033[41m" + _ANSI["white"],
}

# First matching prefix wins, so specific modules come before their package.
COMPONENT_STYLES: tuple[tuple[str, str], ...] = (
    ("md_forecast.services.simgen", _ANSI["light_cyan"]),
    ("md_forecast.services.forecaster", _ANSI["light_magenta"]),
    ("md_forecast.services.rollout", _ANSI["light_blue"]),
    ("md_forecast.services.morse", _ANSI["magenta"]),
    ("md_forecast.services", _ANSI["cyan"]),
    ("md_forecast.commands", _ANSI["blue"]),
    ("md_forecast.middleware", _ANSI["yellow"]),
    ("md_forecast.config", _ANSI["green"]),
)

TOKEN_STYLES: tuple[tuple[re.Pattern[str], str], ...] = (
    (re.compile(r"\d+(?:\.\d+)?ms\b"), _ANSI["light_yellow"]),
    (re.compile(r"\bseed=\d+"), _ANSI["cyan"]),
    (re.compile(r"\b(?:violations|frozen|V_n)=\d+"), _ANSI["light_magenta"]),
)

# (keywords, glyph, style); checked in order against the lower-cased message
STATUS_GLYPHS: tuple[tuple[tuple[str, ...], str, str], ...] = (
    (("starting", "running "), ">>>", _ANSI["light_green"]),
    (("error", "failed"), "!!", _ANSI["light_red"]),
    (("warning", "slow", "diverged"), "!", _ANSI["light_yellow"]),
    (("completed", "saved", "wrote"), "OK", _ANSI["light_green"]),
)

_PACKAGE = "md_forecast."


class ColorfulFormatter(logging.Formatter):
    """`time | level | component | message` with optional ANSI colors."""

    def __init__(self, use_colors: bool = True) -> None:
        super().__init__()
        self.use_colors = use_colors

    def paint(self, text: str, style: str) -> str:
        return f"{style}{text}{RESET}" if self.use_colors else text

    @staticmethod
    def component_style(logger_name: str) -> str:
        for prefix, style in COMPONENT_STYLES:
            if logger_name.startswith(prefix):
                return style
        return _ANSI["white"]

    def highlight(self, message: str) -> str:
        if not self.use_colors:
            return message
        for pattern, style in TOKEN_STYLES:
            message = pattern.sub(lambda m, s=style: f"{s}{m.group(0)}{RESET}", message)
        return message

    def format(self, record: logging.LogRecord) -> str:
        stamp = datetime.fromtimestamp(record.created).astimezone()
        when = f"{stamp:%H:%M:%S}.{int(record.msecs):03d} {stamp:%m/%d}"
        component = record.name.removeprefix(_PACKAGE)
        bar = self.paint("|", DIM)
        fields = (
            self.paint(when, DIM),
            self.paint(f"{record.levelname:<8}", LEVEL_STYLES.get(record.levelname, "")),
            self.paint(f"{component:<22}", self.component_style(record.name)),
            self.highlight(record.getMessage()),
        )
        line = f" {bar} ".join(fields)
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


class CommandFormatter(ColorfulFormatter):
    """Adds a status glyph column for start, failure, warning and success lines."""

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        if not self.use_colors:
            return line
        message = record.getMessage().lower()
        for keywords, glyph, style in STATUS_GLYPHS:
            if any(word in message for word in keywords):
                return f"{self.paint(glyph, style)}{' ' * (4 - len(glyph))}{line}"
        return f"    {line}"
