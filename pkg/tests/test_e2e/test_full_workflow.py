"""End-to-end runs of the md-forecast pipeline through the command line."""

import json
from pathlib import Path

import numpy as np
import pytest

from md_forecast.cli import main
from md_forecast.services.trajectory import read_trajectory
from md_forecast.utils.io import read_table


@pytest.fixture
def pipeline_config(tmp_path: Path) -> Path:
    """Small but complete pipeline: 6 atoms, 600 frames, MLP backbone."""
    config = tmp_path / "pipeline.toml"
    config.write_text(f"""
seed = 11
run_id = "e2e"
out_dir = '{tmp_path / "runs"}'

[simgen]
species_counts = {{ A = 3, B = 3 }}
n_steps = 600
temperature_K = 500.0

[window]
H = 8
L = 4

[model]
backbone = "mlp"
hidden = 16

[train]
lam = 1e-3
max_epochs = 3
pairs_per_step = 15
batch_size = 16

[rollout]
total_steps = 40
pairs_per_step = 15

[eval]
pairs_per_step = 15
thresholds = "train"
""")
    return config


@pytest.mark.slow
def test_full_pipeline(pipeline_config: Path, tmp_path: Path) -> None:
    """gen-data -> train -> rollout -> evaluate -> diffusivity.

    Every stage exits 0 and leaves its artifacts in one run directory;
    the evaluation covers exactly the generated frames.
    """
    run_dir = tmp_path / "runs" / "e2e"
    base = ["--config", str(pipeline_config)]

    assert main([*base, "gen-data"]) == 0
    assert main([*base, "train"]) == 0
    assert main([*base, "rollout", str(run_dir / "model.ckpt")]) == 0
    assert (
        main([*base, "evaluate", str(run_dir / "predicted.xyz"), str(run_dir / "test.xyz")])
        == 0
    )
    assert main([*base, "diffusivity", str(run_dir / "predicted.xyz")]) == 0

    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["frames"]["total"] == 600

    predicted = read_trajectory(run_dir / "predicted.xyz")
    assert predicted.n_frames == 8 + 40
    assert np.all(np.isfinite(predicted.positions))

    metrics = read_table(run_dir / "metrics.csv", ["metric", "value", "threshold_table"])
    by_name = dict(zip(metrics["metric"], metrics["value"], strict=True))
    assert int(by_name["steps_checked"]) == 40
    assert 0.0 <= float(by_name["V_r"]) <= 1.0
    assert float(by_name["mse_delta"]) >= 0.0

    rollout_log = read_table(run_dir / "rollout_log.csv", ["step", "frozen", "n_pairs_checked"])
    assert len(rollout_log) == 40
    assert set(rollout_log["n_pairs_checked"]) == {15}

    resolved = json.loads((run_dir / "resolved_config.json").read_text())
    assert resolved["model"]["backbone"] == "mlp"
    assert resolved["seed"] == 11


@pytest.mark.slow
def test_pipeline_is_reproducible(pipeline_config: Path, tmp_path: Path) -> None:
    """Two runs with the same seed produce identical trajectories and forecasts."""
    first = tmp_path / "runs" / "first"
    second = tmp_path / "runs" / "second"
    for run_id in ("first", "second"):
        base = ["--config", str(pipeline_config), "--set", f"run_id={run_id}"]
        assert main([*base, "gen-data"]) == 0
        assert main([*base, "train"]) == 0
        run_dir = tmp_path / "runs" / run_id
        assert main([*base, "rollout", str(run_dir / "model.ckpt")]) == 0

    assert (first / "train.xyz").read_bytes() == (second / "train.xyz").read_bytes()
    np.testing.assert_array_equal(
        read_trajectory(first / "predicted.xyz").positions,
        read_trajectory(second / "predicted.xyz").positions,
    )
