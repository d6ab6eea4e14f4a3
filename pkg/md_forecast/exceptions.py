"""Exception hierarchy for md-forecast.

Every error raised by the package derives from MDForecastError. The four
category bases decide the CLI exit code:

- ConfigError: 1
- DataError, PhysicsError, TrainingError: 2
- PartialFailure: 3
"""

from typing import Any

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_PARTIAL = 3


class MDForecastError(Exception):
    """Base class for all md-forecast errors."""

    exit_code: int = EXIT_RUNTIME


class ConfigError(MDForecastError, ValueError):
    """Invalid or inconsistent configuration."""

    exit_code = EXIT_CONFIG


class DataError(MDForecastError):
    """Malformed, inconsistent or insufficient input data."""


class PhysicsError(MDForecastError):
    """Physical model evaluation or simulation failure."""


class TrainingError(MDForecastError):
    """Forecaster training or inference failure."""


class PartialFailure(MDForecastError):
    """Command finished but some items failed."""

    exit_code = EXIT_PARTIAL

    def __init__(self, message: str, failed: list[str] | None = None) -> None:
        super().__init__(message)
        self.failed = failed or []


# Configuration


class UnknownConfigKey(ConfigError):
    """Config file or override names a key that does not exist."""

    def __init__(self, key: str) -> None:
        super().__init__(f"Unknown config key: {key}")
        self.key = key


class UnknownBackbone(ConfigError):
    """Requested backbone kind is not registered."""

    def __init__(self, kind: str, available: list[str]) -> None:
        super().__init__(
            f"Unknown backbone '{kind}'. Available: {', '.join(sorted(available))}"
        )
        self.kind = kind


class DuplicateBackbone(ConfigError):
    """A backbone kind is registered twice."""

    def __init__(self, kind: str) -> None:
        super().__init__(f"Backbone '{kind}' is already registered")
        self.kind = kind


# Data


class TrajectoryTooShort(DataError, ValueError):
    """Trajectory has fewer frames than the operation needs."""

    def __init__(self, frames: int, required: int) -> None:
        super().__init__(f"Trajectory has {frames} frames, need at least {required}")
        self.frames = frames
        self.required = required


class ShapeMismatch(DataError, ValueError):
    """Array or atom-count shapes do not agree."""


class HorizonMismatch(DataError, ValueError):
    """Predicted and reference trajectories cover different horizons."""


class ParseError(DataError, ValueError):
    """A trajectory or table file could not be parsed."""

    def __init__(
        self,
        message: str,
        line: int | None = None,
        column: str | None = None,
    ) -> None:
        location = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class InconsistentAtomCount(DataError, ValueError):
    """A frame's atom count differs from the rest of the trajectory."""

    def __init__(self, expected: int, found: int, line: int | None = None) -> None:
        location = f" at line {line}" if line is not None else ""
        super().__init__(
            f"Frame has {found} atoms, expected {expected}{location}"
        )
        self.expected = expected
        self.found = found
        self.line = line


class SegmentTooShort(DataError, ValueError):
    """A train/valid/test segment is too short for the window spec."""

    def __init__(self, segment: str, frames: int, required: int) -> None:
        super().__init__(
            f"Segment '{segment}' has {frames} frames, need at least {required}"
        )
        self.segment = segment


class EmptyInput(DataError, ValueError):
    """An operation received no data."""


class EmptyDataset(DataError, ValueError):
    """Training was given an empty window set."""


class IndexOutOfRange(DataError, IndexError):
    """Atom index outside the frame."""


class SelfPair(DataError, ValueError):
    """A pair was requested with i == j."""


class NoAtomsOfSpecies(DataError, ValueError):
    """Species filter matched no atoms."""


class WindowOutOfRange(DataError, ValueError):
    """Fit window lies outside the available lag range."""


class CheckpointFormatError(DataError):
    """Checkpoint file is missing fields or has an unknown format tag."""


# Physics


class NonPositiveDistance(PhysicsError, ValueError):
    """Morse energy requested at d <= 0."""


class FitDiverged(PhysicsError):
    """Damped least squares could not decrease the residual."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class DegenerateSamples(PhysicsError, ValueError):
    """Fewer than five distinct sample distances."""


class MissingPairParams(PhysicsError, KeyError):
    """No Morse parameters or threshold for a species/atom pair."""

    def __init__(self, pair: str) -> None:
        super().__init__(f"No parameters for pair {pair}")
        self.pair = pair

    def __str__(self) -> str:
        return str(self.args[0])


class BlowUp(PhysicsError):
    """Simulation produced non-finite or runaway state."""

    def __init__(self, step: int, reason: str) -> None:
        super().__init__(f"Simulation blew up at step {step}: {reason}")
        self.step = step


# Training / inference


class NonFiniteLoss(TrainingError):
    """Loss became NaN or infinite."""

    def __init__(self, epoch: int, batch: int, value: float) -> None:
        super().__init__(
            f"Non-finite loss {value} at epoch {epoch}, batch {batch}"
        )
        self.epoch = epoch
        self.batch = batch


class NonFiniteGradient(TrainingError):
    """Gradient contains NaN or infinite entries."""


class NonFinitePrediction(TrainingError):
    """Forecaster produced a non-finite displacement during rollout."""

    def __init__(self, step: int) -> None:
        super().__init__(f"Non-finite prediction at rollout step {step}")
        self.step = step
