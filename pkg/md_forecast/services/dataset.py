"""Supervised windows and normalization.

For frame t the feature row is X_t = [r_t, Δ_{t−1}] with the lag of the
first frame set to zero. A window starting at s holds rows s..s+H−1 and
targets Δ_{s+H−1}..Δ_{s+H+L−2}, the displacements that follow the last
history frame.
"""

import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray

from md_forecast.exceptions import EmptyInput, TrajectoryTooShort
from md_forecast.models.trajectory import Trajectory
from md_forecast.models.windows import STD_FLOOR, Normalizer, WindowSet, WindowSpec

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


def build_features(positions: FloatArray, lagged_deltas: FloatArray) -> FloatArray:
    """Interleave positions and lagged displacements into (T, 6N) rows.

    Args:
        positions: (T, N, 3) r_t
        lagged_deltas: (T, N, 3) Δ_{t−1}
    """
    t, n, _ = positions.shape
    return np.concatenate([positions, lagged_deltas], axis=-1).reshape(t, 6 * n)


def lagged_displacements(positions: FloatArray) -> FloatArray:
    """Δ_{t−1} for every frame, zero for the first."""
    lagged = np.zeros_like(positions)
    lagged[1:] = np.diff(positions, axis=0)
    return lagged


def window_count(n_frames: int, spec: WindowSpec) -> int:
    """floor((T − H − L) / stride) + 1, or 0 when T < H + L."""
    if n_frames < spec.span:
        return 0
    return (n_frames - spec.span) // spec.stride + 1


def make_windows(traj: Trajectory, spec: WindowSpec) -> WindowSet:
    """Cut a trajectory into (features, targets) windows.

    Features and targets are read-only strided views over the source
    arrays; batches copy on indexing.

    Raises:
        TrajectoryTooShort: If T < H + L
    """
    count = window_count(traj.n_frames, spec)
    if count == 0:
        raise TrajectoryTooShort(frames=traj.n_frames, required=spec.span)
    n = traj.n_atoms
    positions = traj.positions
    features = build_features(positions, lagged_displacements(positions))
    deltas = np.diff(positions, axis=0).reshape(traj.n_frames - 1, 3 * n)

    starts = np.arange(count, dtype=np.int64) * spec.stride
    feature_view = sliding_window_view(features, spec.H, axis=0).transpose(0, 2, 1)
    target_view = sliding_window_view(deltas[spec.H - 1 :], spec.L, axis=0).transpose(
        0, 2, 1
    )
    windows = WindowSet(
        features=feature_view[:: spec.stride][:count],
        targets=target_view[:: spec.stride][:count],
        base_positions=positions[starts + spec.H - 1],
        species=traj.species,
        spec=spec,
        starts=starts,
    )
    logger.debug(
        "Made %d windows (H=%d, L=%d, stride=%d) from %d frames",
        count,
        spec.H,
        spec.L,
        spec.stride,
        traj.n_frames,
    )
    return windows


def fit_normalizer(windows: WindowSet, enabled: bool = True) -> Normalizer:
    """Per-column z-score statistics over every feature row of the windows.

    Raises:
        EmptyInput: If there are no windows
    """
    if len(windows) == 0:
        raise EmptyInput("Cannot fit a normalizer on zero windows")
    if not enabled:
        return Normalizer.identity(windows.n_atoms)
    mean = windows.features.mean(axis=(0, 1))
    std = np.maximum(windows.features.std(axis=(0, 1)), STD_FLOOR)
    return Normalizer(mean=np.asarray(mean), std=np.asarray(std), enabled=True)
