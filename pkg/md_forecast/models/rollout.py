"""Rollout data models."""

import math
from dataclasses import dataclass, field
from typing import Literal

from md_forecast.models.trajectory import Trajectory

FreezePolicy = Literal["freeze_all", "freeze_violating"]


@dataclass(frozen=True)
class RolloutConfig:
    """Autoregressive rollout settings.

    total_steps frames are predicted after the seed history, L at a time.
    With pii_enabled, pairs_per_step sampled pairs are vetted per step;
    values >= N(N-1)/2 check every pair.
    """

    total_steps: int = 1000
    L: int = 16
    pii_enabled: bool = True
    pairs_per_step: int = 500
    seed: int = 0
    freeze_policy: FreezePolicy = "freeze_all"
    log_every: int = 10

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.pii_enabled and self.pairs_per_step < 1:
            raise ValueError(f"pairs_per_step must be >= 1, got {self.pairs_per_step}")
        if self.freeze_policy not in ("freeze_all", "freeze_violating"):
            raise ValueError(f"Unknown freeze_policy: {self.freeze_policy!r}")


@dataclass(frozen=True)
class StepRecord:
    """What the physics guard saw at one predicted step."""

    step: int
    violated: bool
    frozen: bool
    n_pairs_checked: int
    max_energy: float = math.nan
    key_of_max: str = ""
    violating_pairs: tuple[tuple[int, int], ...] = ()


@dataclass
class RolloutLog:
    """Per-step guard records for one rollout."""

    records: list[StepRecord] = field(default_factory=list)

    @property
    def frozen_steps(self) -> int:
        return sum(1 for r in self.records if r.frozen)

    @property
    def violated_steps(self) -> int:
        return sum(1 for r in self.records if r.violated)

    def rows(self) -> list[dict[str, object]]:
        """Rows for `step,violated,frozen,n_pairs_checked,max_energy,key_of_max`."""
        return [
            {
                "step": r.step,
                "violated": int(r.violated),
                "frozen": int(r.frozen),
                "n_pairs_checked": r.n_pairs_checked,
                "max_energy": r.max_energy,
                "key_of_max": r.key_of_max,
            }
            for r in self.records
        ]


@dataclass(frozen=True)
class RolloutResult:
    """Outcome of one rollout run in a batch."""

    key: str
    trajectory: Trajectory | None
    log: RolloutLog | None
    success: bool
    error: str | None = None
