"""File codecs: extended-XYZ and CSV trajectories, CSV tables, JSON manifests.

Numbers are written with 15 significant digits so that a write/read
round-trip is lossless at 1e-10 and reruns are byte-identical.
"""

import json
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any, TextIO

import numpy as np
import pandas as pd

from md_forecast.exceptions import InconsistentAtomCount, ParseError
from md_forecast.models.trajectory import Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"
TRAJECTORY_CSV_COLUMNS = ("step", "atom_id", "species", "x", "y", "z")

_STEP_PATTERN = re.compile(r"\bstep=(-?\d+)")
_DT_PATTERN = re.compile(r"\bdt_fs=([-+0-9.eE]+)")


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % value


# Extended XYZ


def write_xyz(traj: Trajectory, path: Path | str) -> None:
    """Write a trajectory as extended XYZ, one block per frame."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        _write_xyz_frames(traj, handle)
    logger.debug("Wrote %d frames to %s", traj.n_frames, path)


def _write_xyz_frames(traj: Trajectory, handle: TextIO) -> None:
    for offset, positions in enumerate(traj.positions):
        handle.write(f"{traj.n_atoms}\n")
        handle.write(f"step={traj.start_step + offset} dt_fs={_fmt(traj.dt_fs)}\n")
        for label, (x, y, z) in zip(traj.species, positions, strict=True):
            handle.write(f"{label} {_fmt(x)} {_fmt(y)} {_fmt(z)}\n")


def read_xyz(path: Path | str) -> Trajectory:
    """Parse an extended-XYZ trajectory.

    The comment line of each frame may carry `step=<int>` and
    `dt_fs=<float>`; frames without a step are numbered by position.

    Raises:
        ParseError: On malformed headers or atom lines (with line number)
        InconsistentAtomCount: If a frame's atom count differs from the first
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    species: list[str] | None = None
    frames: list[np.ndarray] = []
    steps: list[int] = []
    dt_fs = 1.0
    cursor = 0
    while cursor < len(lines):
        if not lines[cursor].strip():
            cursor += 1
            continue
        header_line = cursor + 1
        try:
            n_atoms = int(lines[cursor].strip())
        except ValueError:
            raise ParseError(
                f"Expected atom count, got {lines[cursor].strip()!r}", line=header_line
            ) from None
        if species is not None and n_atoms != len(species):
            raise InconsistentAtomCount(expected=len(species), found=n_atoms, line=header_line)
        if cursor + 1 + n_atoms >= len(lines):
            raise ParseError("Truncated frame", line=header_line)
        comment = lines[cursor + 1]
        step_match = _STEP_PATTERN.search(comment)
        steps.append(int(step_match.group(1)) if step_match else len(frames))
        dt_match = _DT_PATTERN.search(comment)
        if dt_match:
            try:
                dt_fs = float(dt_match.group(1))
            except ValueError:
                raise ParseError(
                    f"Invalid dt_fs {dt_match.group(1)!r}", line=header_line + 1
                ) from None

        labels: list[str] = []
        coords = np.empty((n_atoms, 3))
        for atom in range(n_atoms):
            line_no = cursor + 3 + atom
            fields = lines[line_no - 1].split()
            if len(fields) < 4:
                raise ParseError(
                    f"Expected '<species> <x> <y> <z>', got {lines[line_no - 1]!r}",
                    line=line_no,
                )
            labels.append(fields[0])
            try:
                coords[atom] = [float(v) for v in fields[1:4]]
            except ValueError:
                raise ParseError(
                    f"Non-numeric coordinate in {lines[line_no - 1]!r}", line=line_no
                ) from None
        if species is None:
            species = labels
        elif labels != species:
            raise ParseError("Species order changed between frames", line=cursor + 3)
        frames.append(coords)
        cursor += 2 + n_atoms

    if species is None:
        raise ParseError(f"No frames in {path}")
    _check_unit_stride(steps)
    return Trajectory(
        species=tuple(species),
        positions=np.stack(frames),
        dt_fs=dt_fs,
        start_step=steps[0],
    )


def _check_unit_stride(steps: Sequence[int]) -> None:
    for offset, step in enumerate(steps):
        if step != steps[0] + offset:
            raise ParseError(
                f"Frame steps must have unit stride: expected {steps[0] + offset}, "
                f"got {step}"
            )


# CSV trajectories


def write_trajectory_csv(traj: Trajectory, path: Path | str) -> None:
    """Write `step,atom_id,species,x,y,z` rows sorted by (step, atom_id)."""
    t, n = traj.n_frames, traj.n_atoms
    flat = traj.positions.reshape(t * n, 3)
    frame = pd.DataFrame(
        {
            "step": np.repeat(traj.step_indices, n),
            "atom_id": np.tile(np.arange(n), t),
            "species": np.tile(np.asarray(traj.species, dtype=object), t),
            "x": flat[:, 0],
            "y": flat[:, 1],
            "z": flat[:, 2],
        }
    )
    _to_csv(frame, path)


def read_trajectory_csv(path: Path | str, dt_fs: float = 1.0) -> Trajectory:
    """Parse a `step,atom_id,species,x,y,z` CSV trajectory.

    Raises:
        ParseError: No data rows, a missing column, a non-numeric value (names
            the column) or atom ids that are not 0..N-1 within a step
        InconsistentAtomCount: If a step has a different number of atoms
    """
    frame = read_table(path, TRAJECTORY_CSV_COLUMNS)
    if frame.empty:
        raise ParseError("Trajectory CSV has a header but no rows", line=2)
    for column in ("step", "atom_id", "x", "y", "z"):
        frame[column] = numeric_column(frame, column)
    frame = frame.sort_values(["step", "atom_id"], kind="stable").reset_index(drop=True)

    counts = frame.groupby("step", sort=True).size()
    n_atoms = int(counts.iloc[0])
    bad = counts[counts != n_atoms]
    if len(bad):
        raise InconsistentAtomCount(expected=n_atoms, found=int(bad.iloc[0]))
    steps = [int(s) for s in counts.index]
    _check_unit_stride(steps)

    ids = frame["atom_id"].to_numpy().reshape(len(steps), n_atoms)
    wrong = np.flatnonzero((ids != np.arange(n_atoms)).any(axis=1))
    if len(wrong):
        raise ParseError(
            f"Step {steps[wrong[0]]} atom_id values must be 0..{n_atoms - 1} once each",
            column="atom_id",
        )

    species_grid = frame["species"].astype(str).to_numpy().reshape(len(steps), n_atoms)
    if not (species_grid == species_grid[0]).all():
        raise ParseError("Species order changed between steps", column="species")
    positions = frame[["x", "y", "z"]].to_numpy(dtype=np.float64)
    return Trajectory(
        species=tuple(species_grid[0]),
        positions=positions.reshape(len(steps), n_atoms, 3),
        dt_fs=dt_fs,
        start_step=steps[0],
    )


def numeric_column(frame: pd.DataFrame, column: str) -> pd.Series:
    """Column coerced to numbers; raises ParseError naming the first bad row."""
    values = pd.to_numeric(frame[column], errors="coerce")
    missing = values.isna()
    if missing.any():
        row = int(np.flatnonzero(missing.to_numpy())[0])
        raise ParseError(
            f"Non-numeric value in column '{column}'", line=row + 2, column=column
        )
    return values


# Tables


def read_table(path: Path | str, required: Iterable[str]) -> pd.DataFrame:
    """Read a CSV table and check its header.

    Raises:
        ParseError: If the file cannot be parsed or a column is missing
    """
    try:
        frame = pd.read_csv(path, skipinitialspace=True, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"Cannot parse {path}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in required:
        if column not in frame.columns:
            raise ParseError(f"Missing column '{column}' in {path}", line=1, column=column)
    return frame


def write_table(
    rows: Sequence[Mapping[str, Any]],
    path: Path | str,
    columns: Sequence[str] | None = None,
) -> Path:
    """Write dict rows to CSV with a fixed column order."""
    frame = pd.DataFrame(list(rows), columns=list(columns) if columns else None)
    return _to_csv(frame, path)


def _to_csv(frame: pd.DataFrame, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload: Mapping[str, Any], path: Path | str) -> Path:
    """Write JSON with sorted keys and a trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
