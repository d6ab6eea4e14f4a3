"""Tests for autoregressive rollout and the physics guard."""

import numpy as np
import pytest

from md_forecast.exceptions import (
    ConfigError,
    NonFinitePrediction,
    ShapeMismatch,
    TrajectoryTooShort,
)
from md_forecast.middleware.timing import TimingStats
from md_forecast.models.morse import MorseTable, ThresholdTable
from md_forecast.models.rollout import RolloutConfig
from md_forecast.models.trajectory import Trajectory
from md_forecast.services.morse import compute_thresholds
from md_forecast.services.rollout import (
    RolloutRun,
    batch_rollout,
    batch_rollout_async,
    rollout,
)
from tests.conftest import ConstantForecaster, ZeroForecaster, random_walk

COLLAPSE = np.array([[0.0, 0.0, 0.0], [-0.5, 0.0, 0.0]])


class NaNForecaster(ZeroForecaster):
    """Zero motion except a NaN at horizon step 1."""

    def predict(self, features: np.ndarray) -> np.ndarray:
        out = super().predict(features)
        out[1, 0] = np.nan
        return out


class RecordingForecaster(ZeroForecaster):
    """Zero motion; keeps every feature window it is given."""

    def __init__(self, H: int, L: int, n_atoms: int) -> None:
        super().__init__(H, L, n_atoms)
        self.seen: list[np.ndarray] = []

    def predict(self, features: np.ndarray) -> np.ndarray:
        self.seen.append(np.array(features))
        return super().predict(features)


def test_zero_model_holds_last_seed_frame(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """No predicted motion keeps every generated frame at the seed's last frame."""
    model = ZeroForecaster(H=3, L=2, n_atoms=2)
    cfg = RolloutConfig(total_steps=7, L=2, pairs_per_step=1)

    traj, log = rollout(model, dimer, morse_table, dimer_thresholds, cfg)

    assert traj.n_frames == dimer.n_frames + 7
    np.testing.assert_array_equal(traj.positions[:6], dimer.positions)
    np.testing.assert_array_equal(traj.positions[6:], np.broadcast_to(dimer.positions[-1], (7, 2, 3)))
    assert model.calls == 4
    assert len(log.records) == 7
    assert log.frozen_steps == 0


def test_guard_freezes_collapse(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """A collapsing pair is rejected every step and the system stays put."""
    model = ConstantForecaster(H=3, L=2, delta=COLLAPSE)
    cfg = RolloutConfig(total_steps=4, L=2, pairs_per_step=1)

    traj, log = rollout(model, dimer, morse_table, dimer_thresholds, cfg)

    np.testing.assert_array_equal(traj.positions[-1], dimer.positions[-1])
    assert log.frozen_steps == 4
    assert log.records[0].violating_pairs == ((0, 1),)
    assert log.records[0].key_of_max == "0:1"
    assert log.records[0].max_energy > 0.05


def test_collapse_without_guard(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """With the guard off the same model pushes the pair to 0.4 Å."""
    model = ConstantForecaster(H=3, L=2, delta=COLLAPSE)
    cfg = RolloutConfig(total_steps=4, L=2, pii_enabled=False)

    traj, log = rollout(model, dimer, morse_table, dimer_thresholds, cfg)

    distance = np.linalg.norm(traj.positions[-1, 1] - traj.positions[-1, 0])
    assert distance == pytest.approx(0.4)
    assert log.frozen_steps == 0
    assert all(r.n_pairs_checked == 0 for r in log.records)


def test_guarded_rollout_stays_within_thresholds(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """With every pair checked, no kept frame exceeds τ."""
    model = ConstantForecaster(H=3, L=3, delta=np.array([[0.0, 0.0, 0.0], [-0.02, 0.0, 0.0]]))
    cfg = RolloutConfig(total_steps=30, L=3, pairs_per_step=1)

    traj, log = rollout(model, dimer, morse_table, dimer_thresholds, cfg)

    recomputed = compute_thresholds(traj, morse_table)
    assert recomputed.species_taus[("A", "A")] <= 0.05
    assert 0 < log.frozen_steps < 30


def test_freeze_violating_moves_other_atoms(morse_table: MorseTable) -> None:
    """Only atoms in violating pairs are held back."""
    positions = np.zeros((3, 3, 3))
    positions[:, 1, 0] = 2.4
    positions[:, 2, 0] = 20.0
    seed = Trajectory(species=("A", "A", "A"), positions=positions)
    thresholds = ThresholdTable(species_taus={("A", "A"): 0.45})
    delta = np.array([[0.0, 0.0, 0.0], [-0.5, 0.0, 0.0], [0.0, 0.1, 0.0]])
    model = ConstantForecaster(H=3, L=2, delta=delta)
    cfg = RolloutConfig(total_steps=2, L=2, pairs_per_step=3, freeze_policy="freeze_violating")

    traj, log = rollout(model, seed, morse_table, thresholds, cfg)

    np.testing.assert_array_equal(traj.positions[-1, :2], positions[-1, :2])
    np.testing.assert_allclose(traj.positions[-1, 2], [20.0, 0.2, 0.0])
    assert log.frozen_steps == 2


def test_rollout_fed_back_displacements(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Frames advance by the predicted displacement each step."""
    step = np.array([[0.1, 0.0, 0.0], [0.1, 0.0, 0.0]])
    model = ConstantForecaster(H=3, L=2, delta=step)
    cfg = RolloutConfig(total_steps=5, L=2, pii_enabled=False)

    traj, _ = rollout(model, dimer, morse_table, dimer_thresholds, cfg)

    np.testing.assert_allclose(traj.positions[-1, :, 0], [0.5, 2.9])


def test_short_horizon_uses_first_steps(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """cfg.L below the model horizon consumes fewer steps per window."""
    model = ZeroForecaster(H=3, L=4, n_atoms=2)
    rollout(model, dimer, morse_table, dimer_thresholds, RolloutConfig(total_steps=6, L=2))
    assert model.calls == 3


def test_rollout_rejects_bad_inputs(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Short seeds, wrong atom counts and over-long horizons are errors."""
    cfg = RolloutConfig(total_steps=2, L=2)
    with pytest.raises(TrajectoryTooShort):
        rollout(ZeroForecaster(H=8, L=2, n_atoms=2), dimer, morse_table, dimer_thresholds, cfg)
    with pytest.raises(ShapeMismatch):
        rollout(ZeroForecaster(H=3, L=2, n_atoms=3), dimer, morse_table, dimer_thresholds, cfg)
    with pytest.raises(ConfigError):
        rollout(
            ZeroForecaster(H=3, L=1, n_atoms=2), dimer, morse_table, dimer_thresholds, cfg
        )


def test_non_finite_prediction_reports_step(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """A NaN in the forecast names the step it appears at."""
    cfg = RolloutConfig(total_steps=4, L=2)
    with pytest.raises(NonFinitePrediction) as excinfo:
        rollout(NaNForecaster(H=3, L=2, n_atoms=2), dimer, morse_table, dimer_thresholds, cfg)
    assert excinfo.value.step == 1


def test_rollout_records_window_timing(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Per-window timings are collected when asked."""
    timing = TimingStats()
    rollout(
        ZeroForecaster(H=3, L=2, n_atoms=2),
        dimer,
        morse_table,
        dimer_thresholds,
        RolloutConfig(total_steps=6, L=2),
        timing=timing,
    )
    assert timing.count == 3


def test_batch_results_sorted_by_key(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Batch output order follows the keys, not submission or completion."""
    cfg = RolloutConfig(total_steps=3, L=2)
    runs = [
        RolloutRun(key=key, model=ZeroForecaster(H=3, L=2, n_atoms=2), config=cfg)
        for key in ("pif=1", "base", "pif=0")
    ]

    results = batch_rollout(runs, dimer, morse_table, dimer_thresholds, max_workers=2)

    assert [r.key for r in results] == ["base", "pif=0", "pif=1"]
    assert all(r.success for r in results)
    first = results[0].trajectory
    assert first is not None
    assert first.n_frames == 9


def test_batch_failures_reported(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """With return_exceptions a failing run becomes an unsuccessful result."""
    cfg = RolloutConfig(total_steps=3, L=2)
    runs = [
        RolloutRun(key="ok", model=ZeroForecaster(H=3, L=2, n_atoms=2), config=cfg),
        RolloutRun(key="bad", model=ZeroForecaster(H=3, L=2, n_atoms=5), config=cfg),
    ]

    results = batch_rollout(runs, dimer, morse_table, dimer_thresholds, return_exceptions=True)

    bad, ok = results
    assert not bad.success
    assert bad.error
    assert ok.success
    with pytest.raises(ShapeMismatch):
        batch_rollout(runs, dimer, morse_table, dimer_thresholds)


def test_batch_edge_cases(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """Empty batches return nothing; duplicate keys are rejected."""
    assert batch_rollout([], dimer, morse_table, dimer_thresholds) == []
    cfg = RolloutConfig(total_steps=1, L=1)
    model = ZeroForecaster(H=3, L=1, n_atoms=2)
    runs = [RolloutRun("a", model, cfg), RolloutRun("a", model, cfg)]
    with pytest.raises(ConfigError):
        batch_rollout(runs, dimer, morse_table, dimer_thresholds)


@pytest.mark.asyncio
async def test_async_batch_runs_every_cell(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """The async batch runs each cell once, two at a time, sorted by key."""
    cfg = RolloutConfig(total_steps=4, L=2)
    models = [ZeroForecaster(H=3, L=2, n_atoms=2) for _ in range(4)]
    runs = [
        RolloutRun(key=f"run{k}", model=model, config=cfg) for k, model in enumerate(models)
    ]

    results = await batch_rollout_async(
        runs, dimer, morse_table, dimer_thresholds, max_workers=2
    )

    assert [r.key for r in results] == ["run0", "run1", "run2", "run3"]
    assert all(r.success for r in results)
    assert [model.calls for model in models] == [2, 2, 2, 2]


def test_prior_frame_sets_first_lag(
    morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """The first seed frame's lag is r_0 - prior when a prior frame is given, else zero."""
    walk = random_walk(5, 2, seed=3, sigma=0.1, species=("A", "A"))
    prior, seed = walk.positions[0], walk.slice(1, 5)
    cfg = RolloutConfig(total_steps=2, L=2, pii_enabled=False)

    with_prior = RecordingForecaster(H=4, L=2, n_atoms=2)
    rollout(with_prior, seed, morse_table, dimer_thresholds, cfg, prior_frame=prior)
    without = RecordingForecaster(H=4, L=2, n_atoms=2)
    rollout(without, seed, morse_table, dimer_thresholds, cfg)

    first_lags = with_prior.seen[0].reshape(4, 2, 6)[:, :, 3:]
    np.testing.assert_allclose(first_lags[0], walk.positions[1] - walk.positions[0])
    np.testing.assert_allclose(first_lags[1:], np.diff(seed.positions, axis=0))
    assert not without.seen[0].reshape(4, 2, 6)[0, :, 3:].any()


def test_prior_frame_shape_checked(
    dimer: Trajectory, morse_table: MorseTable, dimer_thresholds: ThresholdTable
) -> None:
    """A prior frame with the wrong atom count is rejected."""
    with pytest.raises(ShapeMismatch, match="prior_frame"):
        rollout(
            ZeroForecaster(H=3, L=2, n_atoms=2),
            dimer,
            morse_table,
            dimer_thresholds,
            RolloutConfig(total_steps=2, L=2),
            prior_frame=np.zeros((3, 3)),
        )
