"""md-forecast services."""

from md_forecast.services.checkpoint import load_checkpoint, save_checkpoint
from md_forecast.services.dataset import (
    build_features,
    fit_normalizer,
    lagged_displacements,
    make_windows,
    window_count,
)
from md_forecast.services.forecaster import (
    ForecastModel,
    clip_gradients,
    evaluate_loss,
    forward,
    gradient,
    train,
)
from md_forecast.services.metrics import (
    detect_divergence,
    diffusivity,
    diffusivity_table,
    forecast_errors,
    msd_fft,
    msd_single_origin,
    violations,
)
from md_forecast.services.morse import (
    PairPotential,
    compute_thresholds,
    fit_morse,
    morse_energy,
    morse_force,
    pair_distance,
    pair_forces,
    synthesize_samples,
)
from md_forecast.services.physics import (
    PenaltyResult,
    TorchPairPotential,
    physics_loss,
    physics_penalty,
)
from md_forecast.services.rollout import (
    RolloutRun,
    batch_rollout,
    batch_rollout_async,
    rollout,
)
from md_forecast.services.simgen import (
    Simulator,
    SimulationRecord,
    generate,
    split_dataset,
    split_lengths,
)
from md_forecast.services.tables import (
    read_energy_samples,
    read_morse_table,
    read_thresholds,
    write_energy_samples,
    write_morse_table,
    write_thresholds,
)
from md_forecast.services.trajectory import (
    compute_displacements,
    read_trajectory,
    reconstruct_positions,
    write_trajectory,
)

__all__ = [
    "ForecastModel",
    "PairPotential",
    "PenaltyResult",
    "RolloutRun",
    "SimulationRecord",
    "Simulator",
    "TorchPairPotential",
    "batch_rollout",
    "batch_rollout_async",
    "build_features",
    "clip_gradients",
    "compute_displacements",
    "compute_thresholds",
    "detect_divergence",
    "diffusivity",
    "diffusivity_table",
    "evaluate_loss",
    "fit_morse",
    "fit_normalizer",
    "forecast_errors",
    "forward",
    "generate",
    "gradient",
    "lagged_displacements",
    "load_checkpoint",
    "make_windows",
    "morse_energy",
    "morse_force",
    "msd_fft",
    "msd_single_origin",
    "pair_distance",
    "pair_forces",
    "physics_loss",
    "physics_penalty",
    "read_energy_samples",
    "read_morse_table",
    "read_thresholds",
    "read_trajectory",
    "reconstruct_positions",
    "rollout",
    "save_checkpoint",
    "split_dataset",
    "split_lengths",
    "synthesize_samples",
    "train",
    "violations",
    "window_count",
    "write_energy_samples",
    "write_morse_table",
    "write_thresholds",
    "write_trajectory",
]
