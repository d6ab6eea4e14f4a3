"""Dependency container for md-forecast commands.

Replaces module-level globals with an explicit object handed to every
subcommand handler.
"""

from dataclasses import dataclass, field
from pathlib import Path

from md_forecast.backbones import BackboneRegistry, default_registry
from md_forecast.config import ConfigFileParser, PipelineConfig, Settings


@dataclass
class Dependencies:
    """Container for md-forecast dependencies.

    Holds process settings, the resolved pipeline config and the backbone
    registry.

    Example:
        deps = Dependencies.create(config_path="exp.toml", overrides=["seed=3"])
        code = handle_gen_data(deps, args)
    """

    settings: Settings
    config: PipelineConfig
    registry: BackboneRegistry = field(default_factory=default_registry)

    @classmethod
    def create(
        cls,
        config_path: Path | str | None = None,
        overrides: list[str] | None = None,
    ) -> "Dependencies":
        """Create dependencies from env settings and a config file.

        Raises:
            ConfigError: Invalid config file or overrides
        """
        config = ConfigFileParser(config_path, overrides).parse()
        return cls(settings=Settings.from_env(), config=config)

    @classmethod
    def from_config(
        cls, config: PipelineConfig, settings: Settings | None = None
    ) -> "Dependencies":
        """Create dependencies around an existing config."""
        return cls(settings=settings or Settings(), config=config)

    @property
    def run_dir(self) -> Path:
        """Directory that receives this run's artifacts (created on demand)."""
        path = self.config.run_dir
        path.mkdir(parents=True, exist_ok=True)
        return path
