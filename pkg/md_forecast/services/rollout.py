"""Autoregressive rollout with optional physics-informed inference.

The forecaster consumes its own predicted positions and post-correction
displacements: each window's features are rebuilt from the last H frames
of the growing trajectory, so a zeroed step feeds Δ = 0 forward.

With the physics guard on, every predicted step is applied tentatively
and M sampled pairs are vetted on the updated positions. If any pair's
Morse energy strictly exceeds its τ the step is rejected: freeze_all keeps
every atom at the previous frame, freeze_violating zeroes only the
displacements of atoms in violating pairs.
"""

import asyncio
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from md_forecast.exceptions import (
    ConfigError,
    NonFinitePrediction,
    ShapeMismatch,
    TrajectoryTooShort,
)
from md_forecast.middleware.timing import TimingStats
from md_forecast.models.morse import MorseTable
from md_forecast.models.rollout import RolloutConfig, RolloutLog, RolloutResult, StepRecord
from md_forecast.models.trajectory import Trajectory
from md_forecast.protocols import Forecaster, ThresholdLookup
from md_forecast.services.dataset import build_features, lagged_displacements
from md_forecast.services.morse import PairPotential
from md_forecast.utils.rng import derive_rng

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class RolloutRun:
    """One cell of a batch: a keyed (model, config) pair."""

    key: str
    model: Forecaster
    config: RolloutConfig


def _vet_step(
    potential: PairPotential,
    previous: FloatArray,
    delta: FloatArray,
    step: int,
    cfg: RolloutConfig,
    rng: np.random.Generator,
) -> tuple[FloatArray, StepRecord]:
    candidate = previous + delta
    select = potential.sample_pairs(rng, cfg.pairs_per_step)
    energies = potential.energies(candidate, select)
    violating = energies > potential.thresholds_for(select)
    worst = int(np.argmax(energies))
    pairs = tuple(
        (int(potential.i[p]), int(potential.j[p])) for p in select[violating]
    )
    record = StepRecord(
        step=step,
        violated=bool(pairs),
        frozen=bool(pairs),
        n_pairs_checked=int(select.shape[0]),
        max_energy=float(energies[worst]),
        key_of_max=potential.pair_key(int(select[worst])),
        violating_pairs=pairs,
    )
    if not pairs:
        return candidate, record
    if cfg.freeze_policy == "freeze_all":
        return previous.copy(), record
    atoms = np.unique(np.array(pairs, dtype=np.int64))
    kept = delta.copy()
    kept[atoms] = 0.0
    return previous + kept, record


def rollout(
    model: Forecaster,
    seed_history: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdLookup,
    cfg: RolloutConfig,
    timing: TimingStats | None = None,
    prior_frame: FloatArray | None = None,
) -> tuple[Trajectory, RolloutLog]:
    """Generate cfg.total_steps frames after the seed history.

    Args:
        model: forecaster mapping (H, 6N) features to (L, 3N) displacements
        seed_history: at least H ground-truth frames to start from
        morse: pair parameters for the guard
        thresholds: τ table used for rejection (normally train-derived)
        cfg: rollout settings; cfg.L steps are taken per window
        timing: optional per-window wall-clock statistics
        prior_frame: (N, 3) positions of the frame just before the seed
            history; gives the first seed frame its true lagged displacement
            instead of zero

    Returns:
        (seed history followed by the predicted frames, per-step log)

    Raises:
        TrajectoryTooShort: Seed history shorter than H
        ShapeMismatch: Atom count differs from the model's
        ConfigError: cfg.L exceeds the model horizon
        MissingPairParams: A pair has no parameters or threshold
        NonFinitePrediction: The model produced NaN/inf (reports the step)
    """
    H, n_atoms = model.H, seed_history.n_atoms
    if seed_history.n_frames < H:
        raise TrajectoryTooShort(frames=seed_history.n_frames, required=H)
    if n_atoms != model.n_atoms:
        raise ShapeMismatch(
            f"Seed history has {n_atoms} atoms, model expects {model.n_atoms}"
        )
    if cfg.L > model.L:
        raise ConfigError(f"rollout.L={cfg.L} exceeds the model horizon {model.L}")

    potential = None
    if cfg.pii_enabled:
        potential = PairPotential.build(seed_history.species, morse, thresholds)
    rng = derive_rng(cfg.seed, "rollout.pairs")

    seed_frames = seed_history.n_frames
    total = seed_frames + cfg.total_steps
    positions = np.empty((total, n_atoms, 3), dtype=np.float64)
    lagged = np.zeros((total, n_atoms, 3), dtype=np.float64)
    positions[:seed_frames] = seed_history.positions
    lagged[:seed_frames] = lagged_displacements(seed_history.positions)
    if prior_frame is not None:
        prior = np.asarray(prior_frame, dtype=np.float64)
        if prior.shape != (n_atoms, 3):
            raise ShapeMismatch(f"prior_frame must be ({n_atoms}, 3), got {prior.shape}")
        lagged[0] = seed_history.positions[0] - prior

    log = RolloutLog()
    n_windows = -(-cfg.total_steps // cfg.L)
    done = 0
    logger.info(
        "Rollout: %d steps in %d windows (H=%d, L=%d), pii=%s, M=%d, policy=%s, seed=%d",
        cfg.total_steps,
        n_windows,
        H,
        cfg.L,
        cfg.pii_enabled,
        cfg.pairs_per_step,
        cfg.freeze_policy,
        cfg.seed,
    )

    for window in range(n_windows):
        start = seed_frames + done
        features = build_features(positions[start - H : start], lagged[start - H : start])
        if timing is not None:
            with timing.measure():
                prediction = np.asarray(model.predict(features), dtype=np.float64)
        else:
            prediction = np.asarray(model.predict(features), dtype=np.float64)
        if prediction.shape != (model.L, 3 * n_atoms):
            raise ShapeMismatch(
                f"Forecaster returned {prediction.shape}, expected ({model.L}, {3 * n_atoms})"
            )
        count = min(cfg.L, cfg.total_steps - done)
        bad = np.flatnonzero(~np.all(np.isfinite(prediction[:count]), axis=1))
        if bad.size:
            raise NonFinitePrediction(step=done + int(bad[0]))

        for k in range(count):
            t = start + k
            delta = prediction[k].reshape(n_atoms, 3)
            if potential is None:
                positions[t] = positions[t - 1] + delta
                record = StepRecord(
                    step=done + k, violated=False, frozen=False, n_pairs_checked=0
                )
            else:
                positions[t], record = _vet_step(
                    potential, positions[t - 1], delta, done + k, cfg, rng
                )
            lagged[t] = positions[t] - positions[t - 1]
            log.records.append(record)

        done += count
        if (window + 1) % cfg.log_every == 0 or done == cfg.total_steps:
            logger.info(
                "Rollout window %d/%d: step %d/%d, frozen=%d, violations=%d",
                window + 1,
                n_windows,
                done,
                cfg.total_steps,
                log.frozen_steps,
                log.violated_steps,
            )

    trajectory = Trajectory(
        species=seed_history.species,
        positions=positions,
        dt_fs=seed_history.dt_fs,
        start_step=seed_history.start_step,
    )
    return trajectory, log


async def batch_rollout_async(
    runs: Sequence[RolloutRun],
    seed_history: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdLookup,
    max_workers: int = 1,
    return_exceptions: bool = False,
    prior_frame: FloatArray | None = None,
) -> list[RolloutResult]:
    """Run independent rollouts concurrently from a shared seed history.

    Each run goes to a worker thread; at most `max_workers` run at once.
    Results come back sorted by run key, independent of completion order.

    Args:
        runs: keyed (model, config) cells
        seed_history: shared seed frames
        morse: pair parameters
        thresholds: τ table for the guard
        max_workers: concurrency limit
        return_exceptions: report failures as unsuccessful results instead
            of raising the first one
        prior_frame: frame before the seed history, passed to every rollout

    Returns:
        List of RolloutResult, one per run, sorted by key.
    """
    keys = [run.key for run in runs]
    if len(set(keys)) != len(keys):
        raise ConfigError(f"Duplicate rollout keys: {sorted(keys)}")
    semaphore = asyncio.Semaphore(max(1, max_workers))

    async def run_single(run: RolloutRun) -> RolloutResult:
        async with semaphore:
            try:
                trajectory, log = await asyncio.to_thread(
                    rollout,
                    run.model,
                    seed_history,
                    morse,
                    thresholds,
                    run.config,
                    prior_frame=prior_frame,
                )
            except Exception as e:
                if not return_exceptions:
                    raise
                logger.warning("Rollout %s failed: %s", run.key, e)
                return RolloutResult(
                    key=run.key, trajectory=None, log=None, success=False, error=str(e)
                )
            return RolloutResult(key=run.key, trajectory=trajectory, log=log, success=True)

    tasks = [run_single(run) for run in runs]
    results = await asyncio.gather(*tasks)
    return sorted(results, key=lambda result: result.key)


def batch_rollout(
    runs: Sequence[RolloutRun],
    seed_history: Trajectory,
    morse: MorseTable,
    thresholds: ThresholdLookup,
    max_workers: int = 1,
    return_exceptions: bool = False,
    prior_frame: FloatArray | None = None,
) -> list[RolloutResult]:
    """Synchronous wrapper around batch_rollout_async."""
    if not runs:
        return []
    return asyncio.run(
        batch_rollout_async(
            runs,
            seed_history,
            morse,
            thresholds,
            max_workers,
            return_exceptions,
            prior_frame=prior_frame,
        )
    )
