"""Data models for md-forecast."""

from md_forecast.models.metrics import (
    DiffusivityReport,
    DivergenceReport,
    ForecastErrors,
    ViolationReport,
)
from md_forecast.models.morse import (
    FitReport,
    Granularity,
    MorseParams,
    MorseTable,
    ThresholdTable,
)
from md_forecast.models.rollout import (
    FreezePolicy,
    RolloutConfig,
    RolloutLog,
    RolloutResult,
    StepRecord,
)
from md_forecast.models.simulation import SimConfig, Thermostat
from md_forecast.models.training import (
    ArchitectureSpec,
    EpochRecord,
    LossBreakdown,
    TrainConfig,
    TrainingLog,
)
from md_forecast.models.trajectory import DisplacementSeries, Frame, Trajectory
from md_forecast.models.windows import (
    FeatureWindow,
    Normalizer,
    TargetWindow,
    WindowSet,
    WindowSpec,
)

__all__ = [
    "ArchitectureSpec",
    "DiffusivityReport",
    "DisplacementSeries",
    "DivergenceReport",
    "EpochRecord",
    "FeatureWindow",
    "FitReport",
    "ForecastErrors",
    "Frame",
    "FreezePolicy",
    "Granularity",
    "LossBreakdown",
    "MorseParams",
    "MorseTable",
    "Normalizer",
    "RolloutConfig",
    "RolloutLog",
    "RolloutResult",
    "SimConfig",
    "StepRecord",
    "TargetWindow",
    "Thermostat",
    "ThresholdTable",
    "TrainConfig",
    "TrainingLog",
    "Trajectory",
    "ViolationReport",
    "WindowSet",
    "WindowSpec",
]
