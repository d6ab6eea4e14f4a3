"""Utilities for md-forecast."""

from md_forecast.utils.console import ColorfulFormatter, CommandFormatter
from md_forecast.utils.io import (
    read_table,
    read_trajectory_csv,
    read_xyz,
    write_json,
    write_table,
    write_trajectory_csv,
    write_xyz,
)
from md_forecast.utils.rng import derive_rng, derive_seed, seed_sequence
from md_forecast.utils.validation import (
    validate_existing_file,
    validate_fractions,
    validate_run_id,
)

__all__ = [
    "ColorfulFormatter",
    "CommandFormatter",
    "derive_rng",
    "derive_seed",
    "read_table",
    "read_trajectory_csv",
    "read_xyz",
    "seed_sequence",
    "validate_existing_file",
    "validate_fractions",
    "validate_run_id",
    "write_json",
    "write_table",
    "write_trajectory_csv",
    "write_xyz",
]
