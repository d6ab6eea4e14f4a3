"""Tests for table and manifest I/O helpers."""

import json
from pathlib import Path

import pandas as pd
import pytest

from md_forecast.exceptions import InconsistentAtomCount, ParseError
from md_forecast.utils.io import (
    numeric_column,
    read_table,
    read_trajectory_csv,
    read_xyz,
    write_json,
    write_table,
)


def test_write_table_fixed_columns(tmp_path: Path) -> None:
    """Columns follow the given order; floats use 15 significant digits."""
    path = write_table(
        [{"b": 0.1 + 0.2, "a": 1}], tmp_path / "sub" / "t.csv", columns=("a", "b")
    )
    assert path.read_text() == "a,b\n1,0.3\n"


def test_read_table_missing_column(tmp_path: Path) -> None:
    """A missing required column is named."""
    path = tmp_path / "t.csv"
    path.write_text("key,value\nx,1\n")
    with pytest.raises(ParseError) as excinfo:
        read_table(path, ("key", "tau"))
    assert excinfo.value.column == "tau"


def test_numeric_column_reports_row() -> None:
    """Non-numeric cells name the CSV line (header is line 1)."""
    frame = pd.DataFrame({"tau": ["0.1", "0.2", "big"]})
    with pytest.raises(ParseError) as excinfo:
        numeric_column(frame, "tau")
    assert excinfo.value.line == 4


def test_write_json_sorted(tmp_path: Path) -> None:
    """Manifests are sorted, indented and newline-terminated."""
    path = write_json({"b": 1, "a": {"d": 2, "c": 3}}, tmp_path / "manifest.json")
    text = path.read_text()
    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["a", "b"]


def test_xyz_steps_need_unit_stride(tmp_path: Path) -> None:
    """Frames must be consecutive steps."""
    path = tmp_path / "gap.xyz"
    path.write_text("2\nstep=0\nA 0 0 0\nB 1 0 0\n2\nstep=2\nA 0 0 0\nB 1 0 0\n")
    with pytest.raises(ParseError, match="unit stride"):
        read_xyz(path)


def test_xyz_truncated(tmp_path: Path) -> None:
    """A frame with too few atom lines is reported at its header."""
    path = tmp_path / "short.xyz"
    path.write_text("3\n\nA 0 0 0\nB 1 0 0\n")
    with pytest.raises(ParseError, match="Truncated") as excinfo:
        read_xyz(path)
    assert excinfo.value.line == 1


def test_csv_ragged_steps(tmp_path: Path) -> None:
    """Every step needs the same number of atoms."""
    path = tmp_path / "ragged.csv"
    path.write_text(
        "step,atom_id,species,x,y,z\n0,0,A,0,0,0\n0,1,B,1,0,0\n1,0,A,0,0,0\n"
    )
    with pytest.raises(InconsistentAtomCount):
        read_trajectory_csv(path)


def test_csv_species_must_not_change(tmp_path: Path) -> None:
    """Species order is fixed across steps."""
    path = tmp_path / "swap.csv"
    path.write_text(
        "step,atom_id,species,x,y,z\n0,0,A,0,0,0\n0,1,B,1,0,0\n1,0,B,0,0,0\n1,1,A,1,0,0\n"
    )
    with pytest.raises(ParseError, match="Species"):
        read_trajectory_csv(path)


def test_csv_header_only(tmp_path: Path) -> None:
    """A CSV with a header and no rows is a ParseError, not an IndexError."""
    path = tmp_path / "empty.csv"
    path.write_text("step,atom_id,species,x,y,z\n")

    with pytest.raises(ParseError, match="no rows") as excinfo:
        read_trajectory_csv(path)
    assert excinfo.value.line == 2


@pytest.mark.parametrize(
    "ids",
    [(0, 0), (0, 2), (1, 2)],
    ids=["duplicate", "gap", "offset"],
)
def test_csv_atom_ids_must_be_dense(tmp_path: Path, ids: tuple[int, int]) -> None:
    """atom_id must be exactly 0..N-1 in every step."""
    path = tmp_path / "ids.csv"
    path.write_text(
        "step,atom_id,species,x,y,z\n"
        "0,0,A,0,0,0\n0,1,B,1,0,0\n"
        f"1,{ids[0]},A,0,0,0\n1,{ids[1]},B,1,0,0\n"
    )

    with pytest.raises(ParseError, match="Step 1 atom_id") as excinfo:
        read_trajectory_csv(path)
    assert excinfo.value.column == "atom_id"
