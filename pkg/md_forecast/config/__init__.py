"""Configuration module for md-forecast.

Provides focused classes for different configuration concerns:
- PipelineConfig: per-stage blocks from the config file
- ConfigFileParser: TOML file plus `--set` overrides
- Settings: environment variable configuration
"""

from md_forecast.config.main import BLOCKS, PipelineConfig, block_keys
from md_forecast.config.parser import ConfigFileParser, parse_literal
from md_forecast.config.settings import Settings

__all__ = [
    "BLOCKS",
    "ConfigFileParser",
    "PipelineConfig",
    "Settings",
    "block_keys",
    "parse_literal",
]
