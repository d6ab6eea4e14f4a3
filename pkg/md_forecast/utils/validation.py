"""Input validation helpers shared by config loading and commands."""

from pathlib import Path

from md_forecast.exceptions import ConfigError


def validate_existing_file(path: str | Path, what: str = "file") -> Path:
    """Return `path` as a Path if it names an existing regular file.

    Raises:
        ConfigError: If the path is empty, missing or a directory
    """
    if not str(path):
        raise ConfigError(f"No {what} given")
    resolved = Path(path).expanduser()
    if not resolved.is_file():
        raise ConfigError(f"{what.capitalize()} not found: {resolved}")
    return resolved


def validate_fractions(train_frac: float, valid_frac: float) -> None:
    """Check train/valid fractions leave a non-empty test share.

    Raises:
        ConfigError: Naming `split` when fractions are out of range
    """
    if not (0 < train_frac < 1 and 0 < valid_frac < 1):
        raise ConfigError(
            f"split fractions must lie in (0, 1): train={train_frac}, valid={valid_frac}"
        )
    if train_frac + valid_frac >= 1:
        raise ConfigError(
            f"split fractions sum to {train_frac + valid_frac:g}; "
            "train + valid must be < 1 to leave a test segment"
        )


def validate_run_id(run_id: str) -> str:
    """A run id is a single path component without separators.

    Raises:
        ConfigError: If it is empty, '.'/'..' or contains a separator
    """
    if not run_id or run_id in (".", "..") or "/" in run_id or "\\" in run_id:
        raise ConfigError(f"Invalid run_id: {run_id!r}")
    if "\x00" in run_id:
        raise ConfigError(f"run_id contains null byte: {run_id!r}")
    return run_id
