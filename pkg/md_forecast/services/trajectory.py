"""Displacement algebra and trajectory file dispatch."""

import logging
from pathlib import Path
from typing import Literal

import numpy as np

from md_forecast.exceptions import ParseError, ShapeMismatch, TrajectoryTooShort
from md_forecast.models.trajectory import DisplacementSeries, Frame, Trajectory
from md_forecast.utils.io import (
    read_trajectory_csv,
    read_xyz,
    write_trajectory_csv,
    write_xyz,
)

logger = logging.getLogger(__name__)

TrajectoryFormat = Literal["xyz", "csv"]


def compute_displacements(traj: Trajectory) -> DisplacementSeries:
    """Per-step displacements Δ_t = r_{t+1} − r_t.

    Raises:
        TrajectoryTooShort: If the trajectory has fewer than 2 frames
    """
    if traj.n_frames < 2:
        raise TrajectoryTooShort(frames=traj.n_frames, required=2)
    return DisplacementSeries(deltas=np.diff(traj.positions, axis=0))


def reconstruct_positions(
    initial: Frame,
    deltas: DisplacementSeries,
    species: tuple[str, ...] | None = None,
    dt_fs: float = 1.0,
) -> Trajectory:
    """Rebuild positions from an initial frame and cumulative displacements.

    Frame 0 equals `initial`; frame t+1 is initial + Δ_0 + … + Δ_t.
    Species default to placeholder labels when not given.

    Raises:
        ShapeMismatch: If atom counts differ
    """
    n_atoms = initial.n_atoms
    if len(deltas) and deltas.n_atoms != n_atoms:
        raise ShapeMismatch(
            f"Initial frame has {n_atoms} atoms, displacements have {deltas.n_atoms}"
        )
    if species is None:
        species = ("X",) * n_atoms
    positions = np.empty((len(deltas) + 1, n_atoms, 3))
    positions[0] = initial.positions
    if len(deltas):
        positions[1:] = initial.positions + np.cumsum(deltas.deltas, axis=0)
    return Trajectory(
        species=species,
        positions=positions,
        dt_fs=dt_fs,
        start_step=initial.step_index,
    )


def infer_format(path: Path | str) -> TrajectoryFormat:
    """Trajectory format from the file extension (.csv, otherwise xyz)."""
    return "csv" if Path(path).suffix.lower() == ".csv" else "xyz"


def read_trajectory(
    path: Path | str,
    format: TrajectoryFormat | None = None,
    dt_fs: float = 1.0,
) -> Trajectory:
    """Read a trajectory file.

    Args:
        path: Trajectory file
        format: "xyz" or "csv"; inferred from the extension when None
        dt_fs: Time step for CSV files, which carry no dt

    Raises:
        ParseError: Malformed file or unknown format
        InconsistentAtomCount: A frame's atom count differs
    """
    fmt = format or infer_format(path)
    if fmt == "xyz":
        traj = read_xyz(path)
    elif fmt == "csv":
        traj = read_trajectory_csv(path, dt_fs=dt_fs)
    else:
        raise ParseError(f"Unknown trajectory format: {fmt!r}")
    logger.debug(
        "Read %s trajectory %s: %d frames x %d atoms",
        fmt,
        path,
        traj.n_frames,
        traj.n_atoms,
    )
    return traj


def write_trajectory(
    traj: Trajectory,
    path: Path | str,
    format: TrajectoryFormat | None = None,
) -> Path:
    """Write a trajectory file; format inferred from the extension when None."""
    fmt = format or infer_format(path)
    if fmt == "xyz":
        write_xyz(traj, path)
    elif fmt == "csv":
        write_trajectory_csv(traj, path)
    else:
        raise ParseError(f"Unknown trajectory format: {fmt!r}")
    return Path(path)
