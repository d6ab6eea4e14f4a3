"""CSV codecs for Morse parameters, energy samples and threshold tables.

- Morse parameters: `species_i,species_j,D_e,a,d_e,b`, species_i <= species_j
- Energy samples: `species_i,species_j,d,energy`
- Thresholds: `key,tau`, key `A-B` (species pair) or `i:j` (atom pair)
"""

import logging
from collections import defaultdict
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from md_forecast.exceptions import ParseError
from md_forecast.models.morse import (
    MorseParams,
    MorseTable,
    SpeciesPair,
    ThresholdTable,
    species_pair,
)
from md_forecast.utils.io import numeric_column, read_table, write_table

logger = logging.getLogger(__name__)

MORSE_COLUMNS = ("species_i", "species_j", "D_e", "a", "d_e", "b")
SAMPLE_COLUMNS = ("species_i", "species_j", "d", "energy")
THRESHOLD_COLUMNS = ("key", "tau")


def read_morse_table(path: Path | str) -> MorseTable:
    """Load a Morse parameter file.

    Raises:
        ParseError: Missing columns, non-numeric or invalid parameters,
            or a species pair listed twice
    """
    frame = read_table(path, MORSE_COLUMNS)
    values = {name: numeric_column(frame, name) for name in ("D_e", "a", "d_e", "b")}
    entries: dict[SpeciesPair, MorseParams] = {}
    for row in range(len(frame)):
        key = species_pair(str(frame["species_i"][row]), str(frame["species_j"][row]))
        if key in entries:
            raise ParseError(f"Duplicate Morse entry for {key[0]}-{key[1]}", line=row + 2)
        try:
            entries[key] = MorseParams(*(float(values[n][row]) for n in ("D_e", "a", "d_e", "b")))
        except ValueError as e:
            raise ParseError(str(e), line=row + 2) from e
    logger.debug("Read %d Morse entries from %s", len(entries), path)
    return MorseTable(entries)


def write_morse_table(table: MorseTable, path: Path | str) -> Path:
    """Write one canonical row per species pair, sorted."""
    rows = [
        dict(zip(MORSE_COLUMNS, (*key, *table.get(*key).as_tuple()), strict=True))
        for key in table
    ]
    return write_table(rows, path, MORSE_COLUMNS)


def read_energy_samples(path: Path | str) -> dict[SpeciesPair, NDArray[np.float64]]:
    """Group (d, energy) samples by canonical species pair, in file order."""
    frame = read_table(path, SAMPLE_COLUMNS)
    d = numeric_column(frame, "d").to_numpy(dtype=np.float64)
    energy = numeric_column(frame, "energy").to_numpy(dtype=np.float64)
    grouped: dict[SpeciesPair, list[tuple[float, float]]] = defaultdict(list)
    for row in range(len(frame)):
        key = species_pair(str(frame["species_i"][row]), str(frame["species_j"][row]))
        grouped[key].append((d[row], energy[row]))
    return {key: np.array(grouped[key], dtype=np.float64) for key in sorted(grouped)}


def write_energy_samples(
    samples: dict[SpeciesPair, NDArray[np.float64]], path: Path | str
) -> Path:
    """Write grouped samples, pairs sorted."""
    rows = [
        {"species_i": key[0], "species_j": key[1], "d": float(d), "energy": float(e)}
        for key in sorted(samples)
        for d, e in samples[key]
    ]
    return write_table(rows, path, SAMPLE_COLUMNS)


def _parse_key(key: str, line: int) -> tuple[str, tuple[str, str] | tuple[int, int]]:
    if ":" in key:
        left, _, right = key.partition(":")
        try:
            return "atom", (int(left), int(right))
        except ValueError:
            raise ParseError(f"Bad atom-pair key '{key}'", line=line, column="key") from None
    left, sep, right = key.partition("-")
    if not sep or not left or not right:
        raise ParseError(f"Bad threshold key '{key}'", line=line, column="key")
    return "species", (left, right)


def read_thresholds(path: Path | str, source: str | None = None) -> ThresholdTable:
    """Load a threshold file; granularity is "atom" when any atom key is present."""
    frame = read_table(path, THRESHOLD_COLUMNS)
    taus = numeric_column(frame, "tau").to_numpy(dtype=np.float64)
    species_taus: dict[tuple[str, str], float] = {}
    atom_taus: dict[tuple[int, int], float] = {}
    for row in range(len(frame)):
        kind, key = _parse_key(str(frame["key"][row]).strip(), row + 2)
        if kind == "atom":
            atom_taus[key] = float(taus[row])  # type: ignore[index]
        else:
            species_taus[key] = float(taus[row])  # type: ignore[index]
    return ThresholdTable(
        granularity="atom" if atom_taus else "species",
        species_taus=species_taus,
        atom_taus=atom_taus,
        source=source if source is not None else str(path),
    )


def write_thresholds(table: ThresholdTable, path: Path | str) -> Path:
    """Write species rows then atom rows."""
    rows = [{"key": key, "tau": tau} for key, tau in table.rows()]
    return write_table(rows, path, THRESHOLD_COLUMNS)
