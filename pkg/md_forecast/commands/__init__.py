"""md-forecast subcommands."""

from md_forecast.commands.handlers import (
    HANDLERS,
    handle_ablate,
    handle_diffusivity,
    handle_evaluate,
    handle_fit_morse,
    handle_gen_data,
    handle_rollout,
    handle_sweep_lambda,
    handle_thresholds,
    handle_train,
)

__all__ = [
    "HANDLERS",
    "handle_ablate",
    "handle_diffusivity",
    "handle_evaluate",
    "handle_fit_morse",
    "handle_gen_data",
    "handle_rollout",
    "handle_sweep_lambda",
    "handle_thresholds",
    "handle_train",
]
