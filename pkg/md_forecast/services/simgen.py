"""Reference Morse-MD trajectory generator and dataset splitting.

Units: Å, fs, amu, eV. Accelerations convert eV/(Å·amu) to Å/fs².
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const
from numpy.typing import NDArray

from md_forecast.exceptions import BlowUp, ConfigError, SegmentTooShort
from md_forecast.models.simulation import SimConfig
from md_forecast.models.trajectory import Trajectory
from md_forecast.models.windows import WindowSpec
from md_forecast.services.morse import PairPotential, pair_forces

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# eV / (Å · amu) in Å / fs²
ACCELERATION_UNIT = const.eV / const.atomic_mass * 1e-20
BOLTZMANN_EV = const.k / const.eV
POSITION_LIMIT = 1e6
MIN_SEPARATION_FACTOR = 0.5
JITTER_FACTOR = 0.05
_PLACEMENT_ATTEMPTS = 100


@dataclass(eq=False)
class SimulationRecord:
    """Trajectory plus per-frame energies (eV) and kinetic temperature (K)."""

    trajectory: Trajectory
    kinetic_ev: FloatArray = field(repr=False)
    potential_ev: FloatArray = field(repr=False)
    temperature_K: FloatArray = field(repr=False)

    @property
    def total_ev(self) -> FloatArray:
        return self.kinetic_ev + self.potential_ev


def kinetic_energy(velocities: FloatArray, masses: FloatArray) -> float:
    """Kinetic energy in eV for velocities in Å/fs and masses in amu."""
    return float(0.5 * np.sum(masses[:, None] * velocities**2) / ACCELERATION_UNIT)


def kinetic_temperature(velocities: FloatArray, masses: FloatArray) -> float:
    """Instantaneous temperature 2·KE / (3 N k_B)."""
    n_dof = 3 * velocities.shape[0]
    return 2.0 * kinetic_energy(velocities, masses) / (n_dof * BOLTZMANN_EV)


def maxwell_boltzmann(
    masses: FloatArray, temperature_K: float, rng: np.random.Generator
) -> FloatArray:
    """Velocities (Å/fs) drawn at the target temperature, zero net momentum."""
    sigma = np.sqrt(BOLTZMANN_EV * temperature_K * ACCELERATION_UNIT / masses)
    velocities = rng.normal(size=(masses.shape[0], 3)) * sigma[:, None]
    momentum = np.sum(masses[:, None] * velocities, axis=0)
    return velocities - momentum / np.sum(masses)


def lattice_positions(config: SimConfig, rng: np.random.Generator) -> FloatArray:
    """Jittered cubic lattice inside the box.

    Raises:
        ConfigError: If no placement keeps atoms 0.5·min d_e apart
    """
    n = config.n_atoms
    per_side = math.ceil(n ** (1.0 / 3.0) - 1e-9)
    spacing = config.box_side / per_side
    grid = np.stack(
        np.meshgrid(*(np.arange(per_side),) * 3, indexing="ij"), axis=-1
    ).reshape(-1, 3)[:n]
    base = (grid + 0.5) * spacing
    d_e = config.morse.min_equilibrium_distance
    min_separation = MIN_SEPARATION_FACTOR * d_e
    for _ in range(_PLACEMENT_ATTEMPTS):
        positions = base + rng.normal(scale=JITTER_FACTOR * d_e, size=base.shape)
        positions = np.clip(positions, 0.0, config.box_side)
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1)) + np.eye(n) * np.inf
        if np.min(dist) >= min_separation:
            return positions
    raise ConfigError(
        f"simgen: box_side={config.box_side} too small to place {n} atoms "
        f"at least {min_separation:.3g} Å apart"
    )


def _reflect(positions: FloatArray, velocities: FloatArray, side: float) -> None:
    low = positions < 0.0
    positions[low] = -positions[low]
    velocities[low] = -velocities[low]
    high = positions > side
    positions[high] = 2.0 * side - positions[high]
    velocities[high] = -velocities[high]


class Simulator:
    """Velocity-Verlet Morse MD with an optional thermostat.

    Langevin uses BAOAB splitting; velocity rescaling uses plain velocity
    Verlet with a rescale to the target temperature every `interval` steps.
    """

    def __init__(self, config: SimConfig) -> None:
        self.config = config
        self.species = config.species
        self.masses = np.array([config.mass_of(s) for s in self.species])
        self.potential = PairPotential.build(self.species, config.morse)
        self.rng = np.random.default_rng(config.seed)

    def _accelerations(self, positions: FloatArray, step: int) -> tuple[FloatArray, float]:
        forces, energy = pair_forces(self.potential, positions, self.config.cutoff)
        if not math.isfinite(energy) or not np.all(np.isfinite(forces)):
            raise BlowUp(step, "non-finite energy or force")
        return forces / self.masses[:, None] * ACCELERATION_UNIT, energy

    def run(
        self,
        initial_positions: FloatArray | None = None,
        initial_velocities: FloatArray | None = None,
    ) -> SimulationRecord:
        """Integrate n_steps − 1 steps and record every frame.

        Raises:
            BlowUp: Non-finite energy or |position| above 1e6 Å (reports the step)
        """
        cfg = self.config
        n = cfg.n_atoms
        if initial_positions is None:
            positions = lattice_positions(cfg, self.rng)
        else:
            positions = np.array(initial_positions, dtype=np.float64).reshape(n, 3)
        if initial_velocities is not None:
            velocities = np.array(initial_velocities, dtype=np.float64).reshape(n, 3)
        elif cfg.initial_velocities:
            velocities = maxwell_boltzmann(self.masses, cfg.temperature_K, self.rng)
        else:
            velocities = np.zeros((n, 3))

        dt = cfg.dt_fs
        thermostat = cfg.thermostat
        kT = BOLTZMANN_EV * cfg.temperature_K
        c1 = math.exp(-thermostat.gamma * dt) if thermostat.kind == "langevin" else 1.0
        c2 = math.sqrt(1.0 - c1 * c1)
        sigma = np.sqrt(kT * ACCELERATION_UNIT / self.masses)[:, None]

        frames = np.empty((cfg.n_steps, n, 3))
        kinetic = np.empty(cfg.n_steps)
        potential = np.empty(cfg.n_steps)
        temperature = np.empty(cfg.n_steps)

        accel, energy = self._accelerations(positions, 0)
        self._record(0, positions, velocities, energy, frames, kinetic, potential, temperature)

        for step in range(1, cfg.n_steps):
            velocities += 0.5 * dt * accel
            if thermostat.kind == "langevin":
                positions += 0.5 * dt * velocities
                velocities = c1 * velocities + c2 * sigma * self.rng.normal(size=(n, 3))
                positions += 0.5 * dt * velocities
            else:
                positions += dt * velocities
            if cfg.reflective_walls:
                _reflect(positions, velocities, cfg.box_side)
            if np.max(np.abs(positions)) > POSITION_LIMIT or not np.all(
                np.isfinite(positions)
            ):
                raise BlowUp(step, f"|position| exceeded {POSITION_LIMIT:g} Å")
            accel, energy = self._accelerations(positions, step)
            velocities += 0.5 * dt * accel
            if thermostat.kind == "velocity_rescale" and step % thermostat.interval == 0:
                current = kinetic_temperature(velocities, self.masses)
                if current > 0:
                    velocities *= math.sqrt(cfg.temperature_K / current)
            self._record(
                step, positions, velocities, energy, frames, kinetic, potential, temperature
            )
            if step % max(cfg.n_steps // 10, 1) == 0:
                logger.debug(
                    "simgen step %d/%d: T=%.1fK E=%.6g eV",
                    step,
                    cfg.n_steps - 1,
                    temperature[step],
                    kinetic[step] + potential[step],
                )

        trajectory = Trajectory(species=self.species, positions=frames, dt_fs=dt)
        return SimulationRecord(
            trajectory=trajectory,
            kinetic_ev=kinetic,
            potential_ev=potential,
            temperature_K=temperature,
        )

    def _record(
        self,
        step: int,
        positions: FloatArray,
        velocities: FloatArray,
        energy: float,
        frames: FloatArray,
        kinetic: FloatArray,
        potential: FloatArray,
        temperature: FloatArray,
    ) -> None:
        frames[step] = positions
        kinetic[step] = kinetic_energy(velocities, self.masses)
        potential[step] = energy
        temperature[step] = kinetic_temperature(velocities, self.masses)


def generate(config: SimConfig) -> Trajectory:
    """Run the reference simulation and return its trajectory.

    Identical configs (seed included) give bit-identical trajectories.
    """
    logger.info(
        "Generating %d frames: %d atoms, T=%.0fK, dt=%.3g fs, thermostat=%s, seed=%d",
        config.n_steps,
        config.n_atoms,
        config.temperature_K,
        config.dt_fs,
        config.thermostat.kind,
        config.seed,
    )
    return Simulator(config).run().trajectory


def split_lengths(n_frames: int, train_frac: float, valid_frac: float) -> tuple[int, int, int]:
    """Contiguous segment lengths (train, valid, test), rounded to whole frames.

    Raises:
        ConfigError: If fractions are not positive or sum to >= 1
    """
    if not (train_frac > 0 and valid_frac > 0 and train_frac + valid_frac < 1):
        raise ConfigError(
            f"split: fractions must be positive with sum < 1, "
            f"got train={train_frac}, valid={valid_frac}"
        )
    n_train = round(n_frames * train_frac)
    n_valid = round(n_frames * valid_frac)
    return n_train, n_valid, n_frames - n_train - n_valid


def split_dataset(
    traj: Trajectory,
    train_frac: float,
    valid_frac: float,
    spec: WindowSpec | None = None,
) -> tuple[Trajectory, Trajectory, Trajectory]:
    """Split into contiguous train → valid → test segments.

    Raises:
        ConfigError: Invalid fractions
        SegmentTooShort: A segment has fewer than H + L frames for `spec`
    """
    n_train, n_valid, n_test = split_lengths(traj.n_frames, train_frac, valid_frac)
    required = spec.span if spec is not None else 1
    for name, length in (("train", n_train), ("valid", n_valid), ("test", n_test)):
        if length < required:
            raise SegmentTooShort(segment=name, frames=length, required=required)
    bounds = np.cumsum([0, n_train, n_valid, n_test])
    train, valid, test = (
        traj.slice(int(bounds[k]), int(bounds[k + 1])) for k in range(3)
    )
    logger.info("Split %d frames into %d/%d/%d", traj.n_frames, n_train, n_valid, n_test)
    return train, valid, test
