"""Pipeline config file parser.

Reads a TOML file and `--set block.key=value` overrides into a
PipelineConfig. Overrides win over the file; their values are parsed as
TOML literals, so `--set eval.lambdas=[0, 1e-4]` and
`--set rollout.pii=false` work, and anything that is not a valid literal
is taken as a plain string.
"""

import logging
import tomllib
import types
from dataclasses import fields
from pathlib import Path
from typing import Any, Literal, Union, get_args, get_origin

from md_forecast.config.main import BLOCKS, GLOBAL_KEYS, PipelineConfig
from md_forecast.exceptions import ConfigError, UnknownConfigKey

logger = logging.getLogger(__name__)

_GLOBAL_TYPES: dict[str, Any] = {"seed": int, "out_dir": str, "run_id": str}


def parse_literal(text: str) -> Any:
    """A TOML literal, or the raw text when it is not one."""
    try:
        return tomllib.loads(f"value = {text}")["value"]
    except tomllib.TOMLDecodeError:
        return text.strip()


def _coerce(name: str, annotation: Any, value: Any) -> Any:
    """Check `value` against a field annotation, widening int to float."""
    origin = get_origin(annotation)
    if origin is Literal:
        if value not in get_args(annotation):
            choices = ", ".join(repr(c) for c in get_args(annotation))
            raise ConfigError(f"{name} must be one of {choices}, got {value!r}")
        return value
    if origin in (Union, types.UnionType):
        for option in get_args(annotation):
            try:
                return _coerce(name, option, value)
            except ConfigError:
                continue
        raise ConfigError(f"{name} has invalid value {value!r}")
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false, got {value!r}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}")
        return value
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a table, got {value!r}")
        _, value_type = get_args(annotation)
        return {
            str(k): _coerce(f"{name}.{k}", value_type, v) for k, v in value.items()
        }
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list, got {value!r}")
        (item_type,) = get_args(annotation)
        return [_coerce(f"{name}[{n}]", item_type, v) for n, v in enumerate(value)]
    return value


class ConfigFileParser:
    """Parser for pipeline config files.

    Unknown blocks and keys raise UnknownConfigKey naming `block.key`.
    """

    def __init__(
        self,
        config_path: Path | str | None = None,
        overrides: list[str] | None = None,
    ) -> None:
        """Initialize config parser.

        Args:
            config_path: TOML file (None for defaults only)
            overrides: `block.key=value` strings applied after the file
        """
        self.config_path = Path(config_path) if config_path is not None else None
        self.overrides = list(overrides or [])

    def read_file(self) -> dict[str, Any]:
        """Raw TOML mapping of the config file ({} when none was given).

        Raises:
            ConfigError: Missing or malformed file
        """
        if self.config_path is None:
            return {}
        if not self.config_path.is_file():
            raise ConfigError(f"Config file not found: {self.config_path}")
        try:
            with self.config_path.open("rb") as handle:
                raw = tomllib.load(handle)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Cannot parse {self.config_path}: {e}") from e
        logger.debug("Read config from %s", self.config_path)
        return raw

    def apply_overrides(self, raw: dict[str, Any]) -> dict[str, Any]:
        """Merge `block.key=value` overrides into a raw mapping."""
        merged = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
        for item in self.overrides:
            dotted, sep, text = item.partition("=")
            dotted = dotted.strip()
            if not sep or not dotted:
                raise ConfigError(f"Override must look like block.key=value, got {item!r}")
            value = parse_literal(text)
            if "." in dotted:
                block, _, key = dotted.partition(".")
                section = merged.setdefault(block, {})
                if not isinstance(section, dict):
                    raise UnknownConfigKey(dotted)
                section[key] = value
            else:
                merged[dotted] = value
            logger.debug("Override %s = %r", dotted, value)
        return merged

    def parse(self) -> PipelineConfig:
        """Build the resolved PipelineConfig.

        Raises:
            UnknownConfigKey: A block or key does not exist
            ConfigError: A value has the wrong type or fails validation
        """
        raw = self.apply_overrides(self.read_file())
        kwargs: dict[str, Any] = {}
        for name, value in raw.items():
            if name in GLOBAL_KEYS:
                kwargs[name] = _coerce(name, _GLOBAL_TYPES[name], value)
                continue
            if name not in BLOCKS:
                raise UnknownConfigKey(name)
            if not isinstance(value, dict):
                raise ConfigError(f"[{name}] must be a table")
            block_type = BLOCKS[name]
            known = {f.name: f for f in fields(block_type)}
            values = {}
            for key, item in value.items():
                if key not in known:
                    raise UnknownConfigKey(f"{name}.{key}")
                values[key] = _coerce(f"{name}.{key}", known[key].type, item)
            try:
                kwargs[name] = block_type(**values)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[{name}]: {e}") from e
        return PipelineConfig(**kwargs)
