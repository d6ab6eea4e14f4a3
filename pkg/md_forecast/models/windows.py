"""Supervised window data models.

Feature columns are atom-major: for atom i the six columns
6i..6i+5 hold (Px, Py, Pz, Δx, Δy, Δz). Target columns are 3i..3i+2
holding (Δx, Δy, Δz).
"""

from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from md_forecast.exceptions import ShapeMismatch

FloatArray = NDArray[np.float64]

FEATURES_PER_ATOM = 6
TARGETS_PER_ATOM = 3
STD_FLOOR = 1e-8


def position_columns(n_atoms: int) -> NDArray[np.int64]:
    """Feature column indices of the position block, atom-major."""
    base = np.arange(n_atoms)[:, None] * FEATURES_PER_ATOM
    return (base + np.arange(3)).ravel()


def displacement_columns(n_atoms: int) -> NDArray[np.int64]:
    """Feature column indices of the lagged-displacement block, atom-major."""
    return position_columns(n_atoms) + 3


@dataclass(frozen=True)
class WindowSpec:
    """History length H, horizon L and stride between window starts."""

    H: int = 64
    L: int = 16
    stride: int = 1

    def __post_init__(self) -> None:
        for name in ("H", "L", "stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"WindowSpec.{name} must be >= 1, got {getattr(self, name)}")

    @property
    def span(self) -> int:
        """Frames one window touches (H history rows + L target steps)."""
        return self.H + self.L


@dataclass(frozen=True, eq=False)
class FeatureWindow:
    """H × 6N feature matrix."""

    values: FloatArray

    @property
    def n_atoms(self) -> int:
        return int(self.values.shape[1] // FEATURES_PER_ATOM)


@dataclass(frozen=True, eq=False)
class TargetWindow:
    """L × 3N displacement matrix."""

    values: FloatArray

    @property
    def n_atoms(self) -> int:
        return int(self.values.shape[1] // TARGETS_PER_ATOM)


@dataclass(frozen=True, eq=False)
class WindowSet(Sequence[tuple[FeatureWindow, TargetWindow]]):
    """Stacked windows cut from one trajectory.

    features: (n, H, 6N); targets: (n, L, 3N); base_positions: (n, N, 3)
    holds r_t of the last history row, the frame the first target
    displacement starts from.
    """

    features: FloatArray
    targets: FloatArray
    base_positions: FloatArray
    species: tuple[str, ...]
    spec: WindowSpec
    starts: NDArray[np.int64] = field(repr=False)

    def __post_init__(self) -> None:
        n = self.features.shape[0]
        if self.targets.shape[0] != n or self.base_positions.shape[0] != n:
            raise ShapeMismatch("features, targets and base_positions disagree on count")

    def __len__(self) -> int:
        return int(self.features.shape[0])

    def __getitem__(self, index: int) -> tuple[FeatureWindow, TargetWindow]:  # type: ignore[override]
        return FeatureWindow(self.features[index]), TargetWindow(self.targets[index])

    def __iter__(self) -> Iterator[tuple[FeatureWindow, TargetWindow]]:
        for index in range(len(self)):
            yield self[index]

    @property
    def n_atoms(self) -> int:
        return len(self.species)

    def subset(self, indices: NDArray[np.int64]) -> "WindowSet":
        """Windows at the given positions, in that order."""
        return WindowSet(
            features=self.features[indices],
            targets=self.targets[indices],
            base_positions=self.base_positions[indices],
            species=self.species,
            spec=self.spec,
            starts=self.starts[indices],
        )


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-column z-score statistics fitted on training windows.

    Targets reuse the statistics of the matching lagged-displacement
    feature columns. A disabled normalizer is the identity.
    """

    mean: FloatArray
    std: FloatArray
    enabled: bool = True

    @classmethod
    def identity(cls, n_atoms: int) -> "Normalizer":
        """Normalizer that leaves values unchanged."""
        width = n_atoms * FEATURES_PER_ATOM
        return cls(mean=np.zeros(width), std=np.ones(width), enabled=False)

    @property
    def n_atoms(self) -> int:
        return int(self.mean.shape[0] // FEATURES_PER_ATOM)

    @property
    def target_mean(self) -> FloatArray:
        return self.mean[displacement_columns(self.n_atoms)]

    @property
    def target_std(self) -> FloatArray:
        return self.std[displacement_columns(self.n_atoms)]

    def apply(self, features: FloatArray) -> FloatArray:
        """Normalize feature rows (..., 6N)."""
        if not self.enabled:
            return np.asarray(features, dtype=np.float64)
        return (features - self.mean) / self.std

    def invert(self, features: FloatArray) -> FloatArray:
        """Undo apply on feature rows (..., 6N)."""
        if not self.enabled:
            return np.asarray(features, dtype=np.float64)
        return features * self.std + self.mean

    def apply_targets(self, targets: FloatArray) -> FloatArray:
        """Normalize displacement rows (..., 3N)."""
        if not self.enabled:
            return np.asarray(targets, dtype=np.float64)
        return (targets - self.target_mean) / self.target_std

    def invert_targets(self, targets: FloatArray) -> FloatArray:
        """Map normalized displacement rows (..., 3N) back to Å."""
        if not self.enabled:
            return np.asarray(targets, dtype=np.float64)
        return targets * self.target_std + self.target_mean
