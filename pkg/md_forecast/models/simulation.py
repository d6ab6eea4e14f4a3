"""Reference simulation configuration."""

from dataclasses import dataclass, field
from typing import Literal

from md_forecast.models.morse import MorseTable

ThermostatKind = Literal["none", "langevin", "velocity_rescale"]


@dataclass(frozen=True)
class Thermostat:
    """Thermostat choice.

    langevin uses `gamma` (1/fs); velocity_rescale rescales every `interval` steps.
    """

    kind: ThermostatKind = "langevin"
    gamma: float = 0.01
    interval: int = 10

    def __post_init__(self) -> None:
        if self.kind not in ("none", "langevin", "velocity_rescale"):
            raise ValueError(f"Unknown thermostat kind: {self.kind!r}")
        if self.kind == "langevin" and not self.gamma > 0:
            raise ValueError(f"Langevin gamma must be > 0, got {self.gamma}")
        if self.kind == "velocity_rescale" and self.interval < 1:
            raise ValueError(f"Rescale interval must be >= 1, got {self.interval}")


@dataclass(frozen=True)
class SimConfig:
    """Classical Morse-MD run definition."""

    species_counts: dict[str, int]
    morse: MorseTable
    n_atoms: int = 0
    box_side: float = 12.0
    temperature_K: float = 800.0
    n_steps: int = 1000
    dt_fs: float = 1.0
    thermostat: Thermostat = field(default_factory=Thermostat)
    seed: int = 0
    cutoff: float = 10.0
    masses: dict[str, float] = field(default_factory=dict)
    default_mass_amu: float = 20.0
    reflective_walls: bool = True
    initial_velocities: bool = True

    def __post_init__(self) -> None:
        if any(count < 0 for count in self.species_counts.values()):
            raise ValueError("species_counts must be non-negative")
        total = sum(self.species_counts.values())
        if total < 2:
            raise ValueError("species_counts must describe at least two atoms")
        if self.n_atoms == 0:
            object.__setattr__(self, "n_atoms", total)
        elif self.n_atoms != total:
            raise ValueError(
                f"n_atoms={self.n_atoms} does not match sum of species_counts={total}"
            )
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")
        if not self.dt_fs > 0:
            raise ValueError(f"dt_fs must be > 0, got {self.dt_fs}")
        if not self.temperature_K > 0:
            raise ValueError(f"temperature_K must be > 0, got {self.temperature_K}")
        if not self.box_side > 0:
            raise ValueError(f"box_side must be > 0, got {self.box_side}")
        if len(self.morse) and not self.cutoff > self.morse.max_equilibrium_distance:
            raise ValueError(
                f"cutoff {self.cutoff} must exceed max d_e "
                f"{self.morse.max_equilibrium_distance}"
            )

    @property
    def species(self) -> tuple[str, ...]:
        """Species label per atom, grouped in sorted species order."""
        labels: list[str] = []
        for name in sorted(self.species_counts):
            labels.extend([name] * self.species_counts[name])
        return tuple(labels)

    def mass_of(self, species: str) -> float:
        """Atomic mass in amu."""
        return self.masses.get(species, self.default_mass_amu)
