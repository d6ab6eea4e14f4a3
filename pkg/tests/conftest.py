"""Shared fixtures: small trajectories, Morse tables and stub forecasters."""

import numpy as np
import pytest

from md_forecast.models.morse import MorseParams, MorseTable, ThresholdTable
from md_forecast.models.trajectory import Trajectory

MORSE_AA = MorseParams(D_e=0.40, a=1.6, d_e=2.4, b=0.0)
MORSE_AB = MorseParams(D_e=0.60, a=1.4, d_e=2.6, b=0.0)
MORSE_BB = MorseParams(D_e=0.50, a=1.5, d_e=2.8, b=0.0)


def random_walk(
    n_frames: int,
    n_atoms: int,
    seed: int = 0,
    sigma: float = 0.02,
    species: tuple[str, ...] | None = None,
    spacing: float = 2.5,
) -> Trajectory:
    """Atoms on a line `spacing` Å apart, each doing a small Gaussian walk."""
    rng = np.random.default_rng(seed)
    start = np.zeros((n_atoms, 3))
    start[:, 0] = np.arange(n_atoms) * spacing
    steps = rng.normal(scale=sigma, size=(n_frames - 1, n_atoms, 3))
    positions = np.concatenate([start[None], start + np.cumsum(steps, axis=0)])
    labels = species or tuple("A" if k % 2 == 0 else "B" for k in range(n_atoms))
    return Trajectory(species=labels, positions=positions)


class ZeroForecaster:
    """Predicts no motion."""

    def __init__(self, H: int, L: int, n_atoms: int) -> None:
        self.H, self.L, self.n_atoms = H, L, n_atoms
        self.calls = 0

    def predict(self, features: np.ndarray) -> np.ndarray:
        self.calls += 1
        return np.zeros((self.L, 3 * self.n_atoms))


class ConstantForecaster:
    """Predicts the same displacement for every step."""

    def __init__(self, H: int, L: int, delta: np.ndarray) -> None:
        self.H, self.L = H, L
        self.delta = np.asarray(delta, dtype=np.float64)
        self.n_atoms = self.delta.shape[0]

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.tile(self.delta.reshape(1, -1), (self.L, 1))


@pytest.fixture
def morse_table() -> MorseTable:
    """Two-species Morse table matching the default config."""
    return MorseTable({("A", "A"): MORSE_AA, ("A", "B"): MORSE_AB, ("B", "B"): MORSE_BB})


@pytest.fixture
def small_traj() -> Trajectory:
    """4 atoms (A, B, A, B), 50 frames of a slow random walk."""
    return random_walk(50, 4, seed=11)


@pytest.fixture
def dimer() -> Trajectory:
    """Two A atoms resting at the A-A equilibrium distance for 6 frames."""
    positions = np.zeros((6, 2, 3))
    positions[:, 1, 0] = MORSE_AA.d_e
    return Trajectory(species=("A", "A"), positions=positions)


@pytest.fixture
def dimer_thresholds() -> ThresholdTable:
    """τ for A-A slightly above the equilibrium energy."""
    return ThresholdTable(species_taus={("A", "A"): 0.05}, source="train")
