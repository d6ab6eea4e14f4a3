"""Trajectory data models."""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from md_forecast.exceptions import InconsistentAtomCount, ShapeMismatch

FloatArray = NDArray[np.float64]


def _frozen_array(values: ArrayLike, ndim: int, name: str) -> FloatArray:
    """Copy values into a read-only float64 array of trailing dimension 3."""
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim or array.shape[-1] != 3:
        raise ShapeMismatch(
            f"{name} must have shape {'(T, ' if ndim == 3 else '('}N, 3), "
            f"got {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite coordinates")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Frame:
    """Per-atom 3D positions (Å) at one integer time index."""

    positions: FloatArray
    step_index: int = 0

    def __post_init__(self) -> None:
        positions = _frozen_array(self.positions, 2, "positions")
        if positions.shape[0] < 2:
            raise ShapeMismatch(f"Frame needs at least 2 atoms, got {positions.shape[0]}")
        object.__setattr__(self, "positions", positions)

    @property
    def n_atoms(self) -> int:
        """Number of atoms N."""
        return int(self.positions.shape[0])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Ordered frames of N atoms with species labels.

    Frames are stored as one (T, N, 3) array; step indices run with unit
    stride from start_step.
    """

    species: tuple[str, ...]
    positions: FloatArray
    dt_fs: float = 1.0
    start_step: int = 0

    def __post_init__(self) -> None:
        positions = _frozen_array(self.positions, 3, "positions")
        species = tuple(str(s) for s in self.species)
        if positions.shape[1] < 2:
            raise ShapeMismatch(
                f"Trajectory needs at least 2 atoms, got {positions.shape[1]}"
            )
        if len(species) != positions.shape[1]:
            raise InconsistentAtomCount(expected=len(species), found=positions.shape[1])
        if not self.dt_fs > 0:
            raise ValueError(f"dt_fs must be > 0, got {self.dt_fs}")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "dt_fs", float(self.dt_fs))
        object.__setattr__(self, "start_step", int(self.start_step))

    @classmethod
    def from_frames(
        cls,
        species: Sequence[str],
        frames: Sequence[Frame],
        dt_fs: float = 1.0,
    ) -> "Trajectory":
        """Build a trajectory from Frame objects with unit-stride step indices.

        Raises:
            ValueError: If frames are empty or step indices are not consecutive
            InconsistentAtomCount: If frames disagree on N
        """
        if not frames:
            raise ValueError("Trajectory needs at least one frame")
        n_atoms = frames[0].n_atoms
        for offset, frame in enumerate(frames):
            if frame.n_atoms != n_atoms:
                raise InconsistentAtomCount(expected=n_atoms, found=frame.n_atoms)
            if frame.step_index != frames[0].step_index + offset:
                raise ValueError(
                    f"Frame steps must have unit stride: expected "
                    f"{frames[0].step_index + offset}, got {frame.step_index}"
                )
        stacked = np.stack([frame.positions for frame in frames])
        return cls(
            species=tuple(species),
            positions=stacked,
            dt_fs=dt_fs,
            start_step=frames[0].step_index,
        )

    @property
    def n_frames(self) -> int:
        """Number of frames T."""
        return int(self.positions.shape[0])

    @property
    def n_atoms(self) -> int:
        """Number of atoms N."""
        return int(self.positions.shape[1])

    @property
    def step_indices(self) -> NDArray[np.int64]:
        """Integer step index of every frame."""
        return np.arange(self.start_step, self.start_step + self.n_frames)

    @property
    def frames(self) -> tuple[Frame, ...]:
        """All frames as Frame objects."""
        return tuple(self.frame(t) for t in range(self.n_frames))

    def frame(self, t: int) -> Frame:
        """Frame at positional index t (negative indices allowed)."""
        index = range(self.n_frames)[t]
        return Frame(positions=self.positions[index], step_index=self.start_step + index)

    def slice(self, start: int, stop: int) -> "Trajectory":
        """Contiguous sub-trajectory of frames [start, stop)."""
        return Trajectory(
            species=self.species,
            positions=self.positions[start:stop],
            dt_fs=self.dt_fs,
            start_step=self.start_step + start,
        )

    def species_indices(self, species: str) -> NDArray[np.int64]:
        """Atom indices carrying the given species label."""
        return np.flatnonzero(np.asarray(self.species) == species)


@dataclass(frozen=True, eq=False)
class DisplacementSeries:
    """Per-step atomic displacements Δ_t = r_{t+1} − r_t, in Å per step."""

    deltas: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        deltas = np.array(self.deltas, dtype=np.float64)
        if deltas.ndim == 2 and deltas.shape[0] == 0:
            deltas = deltas.reshape(0, 0, 3)
        if deltas.ndim != 3 or deltas.shape[-1] != 3:
            raise ShapeMismatch(f"deltas must have shape (T-1, N, 3), got {deltas.shape}")
        if not np.all(np.isfinite(deltas)):
            raise ValueError("deltas contain non-finite values")
        deltas.setflags(write=False)
        object.__setattr__(self, "deltas", deltas)

    def __len__(self) -> int:
        return int(self.deltas.shape[0])

    @property
    def n_atoms(self) -> int:
        """Number of atoms N (0 for an empty series without atom info)."""
        return int(self.deltas.shape[1])
