"""Morse potential data models."""

import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import Literal

from md_forecast.exceptions import MissingPairParams

Granularity = Literal["species", "atom"]
SpeciesPair = tuple[str, str]
AtomPair = tuple[int, int]


def species_pair(a: str, b: str) -> SpeciesPair:
    """Canonical unordered species-pair key (lexicographic)."""
    return (a, b) if a <= b else (b, a)


def atom_pair(i: int, j: int) -> AtomPair:
    """Canonical unordered atom-index pair key."""
    return (i, j) if i <= j else (j, i)


def format_species_key(pair: SpeciesPair) -> str:
    """Render a species pair as 'A-B'."""
    return f"{pair[0]}-{pair[1]}"


def format_atom_key(pair: AtomPair) -> str:
    """Render an atom pair as 'i:j'."""
    return f"{pair[0]}:{pair[1]}"


@dataclass(frozen=True)
class MorseParams:
    """Parameters of E(d) = D_e (1 − exp(−a (d − d_e)))² + b.

    Units: D_e and b in eV, a in 1/Å, d_e in Å.
    """

    D_e: float
    a: float
    d_e: float
    b: float = 0.0

    def __post_init__(self) -> None:
        for name in ("D_e", "a", "d_e"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"MorseParams.{name} must be finite and > 0, got {value}")
        if not math.isfinite(self.b):
            raise ValueError(f"MorseParams.b must be finite, got {self.b}")

    @property
    def asymptote(self) -> float:
        """Dissociation limit D_e + b."""
        return self.D_e + self.b

    def as_tuple(self) -> tuple[float, float, float, float]:
        """(D_e, a, d_e, b)."""
        return (self.D_e, self.a, self.d_e, self.b)


@dataclass(frozen=True)
class MorseTable:
    """Species-pair → MorseParams mapping with canonical keys."""

    entries: Mapping[SpeciesPair, MorseParams] = field(default_factory=dict)

    def __post_init__(self) -> None:
        canonical = {species_pair(*key): value for key, value in self.entries.items()}
        object.__setattr__(self, "entries", canonical)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SpeciesPair]:
        return iter(sorted(self.entries))

    def __contains__(self, key: object) -> bool:
        if not isinstance(key, tuple) or len(key) != 2:
            return False
        return species_pair(str(key[0]), str(key[1])) in self.entries

    def get(self, a: str, b: str) -> MorseParams:
        """Parameters for species pair (a, b).

        Raises:
            MissingPairParams: If the pair has no entry
        """
        key = species_pair(a, b)
        try:
            return self.entries[key]
        except KeyError:
            raise MissingPairParams(format_species_key(key)) from None

    @property
    def max_equilibrium_distance(self) -> float:
        """Largest d_e across all entries (0 when empty)."""
        return max((p.d_e for p in self.entries.values()), default=0.0)

    @property
    def min_equilibrium_distance(self) -> float:
        """Smallest d_e across all entries (0 when empty)."""
        return min((p.d_e for p in self.entries.values()), default=0.0)


@dataclass(frozen=True)
class ThresholdTable:
    """Energy thresholds τ (eV) keyed by atom pair and/or species pair.

    Lookup prefers the per-atom entry and falls back to the species entry.
    `source` names where the table came from ("train", "test", a file path)
    so reports never conflate train- and test-derived tables.
    """

    granularity: Granularity = "species"
    species_taus: Mapping[SpeciesPair, float] = field(default_factory=dict)
    atom_taus: Mapping[AtomPair, float] = field(default_factory=dict)
    source: str = "train"

    def __post_init__(self) -> None:
        if self.granularity not in ("species", "atom"):
            raise ValueError(f"granularity must be 'species' or 'atom', got {self.granularity!r}")
        species = {species_pair(*k): float(v) for k, v in self.species_taus.items()}
        atoms = {atom_pair(*k): float(v) for k, v in self.atom_taus.items()}
        for key, tau in [*species.items(), *atoms.items()]:
            if not math.isfinite(tau):
                raise ValueError(f"Threshold for {key} is not finite: {tau}")
        object.__setattr__(self, "species_taus", species)
        object.__setattr__(self, "atom_taus", atoms)

    def lookup(self, i: int, j: int, species_i: str, species_j: str) -> float:
        """Threshold for the atom pair (i, j) with the given species.

        Raises:
            MissingPairParams: If neither the atom nor the species pair is present
        """
        tau = self.atom_taus.get(atom_pair(i, j))
        if tau is not None:
            return tau
        key = species_pair(species_i, species_j)
        tau = self.species_taus.get(key)
        if tau is None:
            raise MissingPairParams(
                f"{format_atom_key(atom_pair(i, j))} ({format_species_key(key)})"
            )
        return tau

    def rows(self) -> list[tuple[str, float]]:
        """(key, tau) rows in file order: species entries then atom entries."""
        rows = [(format_species_key(k), v) for k, v in sorted(self.species_taus.items())]
        rows += [(format_atom_key(k), v) for k, v in sorted(self.atom_taus.items())]
        return rows


@dataclass(frozen=True)
class FitReport:
    """Outcome of a damped least-squares Morse fit."""

    rmse: float
    iterations: int
    converged: bool
    damping: float
    message: str = ""
