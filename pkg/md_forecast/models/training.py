"""Forecaster training data models."""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

LRSchedule = Literal["constant", "plateau"]

ACTIVATIONS = ("gelu", "relu", "silu", "tanh")


@dataclass(frozen=True)
class ArchitectureSpec:
    """Backbone descriptor: kind, widths and the (H, L, N) shape contract.

    `activation` applies to the hidden layers of mlp and mixer.
    """

    kind: str
    H: int
    L: int
    n_atoms: int
    hidden: int = 64
    blocks: int = 2
    activation: str = "gelu"

    def __post_init__(self) -> None:
        if min(self.H, self.L, self.n_atoms, self.hidden, self.blocks) < 1:
            raise ValueError(f"ArchitectureSpec sizes must be >= 1: {self}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"Unknown activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )

    @property
    def in_channels(self) -> int:
        """6N feature channels per history row."""
        return 6 * self.n_atoms

    @property
    def out_channels(self) -> int:
        """3N displacement channels per horizon row."""
        return 3 * self.n_atoms

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TrainConfig:
    """Physics-informed training hyperparameters.

    Defaults follow the published setup: 500 sampled pairs, batch 16,
    learning rate 0.01, patience 3, at most 10 epochs.
    """

    lam: float = 1e-4
    pairs_per_step: int = 500
    batch_size: int = 16
    learning_rate: float = 0.01
    clip_norm: float = 1.0
    max_epochs: int = 10
    patience: int = 3
    seed: int = 0
    chain_physics: bool = True
    lr_schedule: LRSchedule = "constant"
    plateau_factor: float = 0.5
    plateau_patience: int = 1
    shuffle: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.pairs_per_step < 1:
            raise ValueError(f"pairs_per_step must be >= 1, got {self.pairs_per_step}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if self.lr_schedule not in ("constant", "plateau"):
            raise ValueError(f"Unknown lr_schedule: {self.lr_schedule!r}")


@dataclass(frozen=True)
class LossBreakdown:
    """Loss terms: total = mse + λ · phys."""

    mse: float
    phys: float
    lam: float
    violating_pair_count: int = 0
    pairs_checked: int = 0

    @property
    def total(self) -> float:
        return self.mse + self.lam * self.phys

    @classmethod
    def mean(cls, parts: list["LossBreakdown"], weights: list[int]) -> "LossBreakdown":
        """Weighted mean of mse/phys; counts are summed."""
        weight = sum(weights)
        return cls(
            mse=sum(p.mse * w for p, w in zip(parts, weights, strict=True)) / weight,
            phys=sum(p.phys * w for p, w in zip(parts, weights, strict=True)) / weight,
            lam=parts[0].lam,
            violating_pair_count=sum(p.violating_pair_count for p in parts),
            pairs_checked=sum(p.pairs_checked for p in parts),
        )


@dataclass(frozen=True)
class EpochRecord:
    """Per-epoch train and validation losses."""

    epoch: int
    train: LossBreakdown
    valid: LossBreakdown
    learning_rate: float
    grad_norm: float
    improved: bool


@dataclass
class TrainingLog:
    """Epoch history plus the epoch whose parameters were kept."""

    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    @property
    def best_valid_loss(self) -> float:
        if self.best_epoch < 0:
            return math.inf
        return self.epochs[self.best_epoch].valid.total

    def rows(self) -> list[dict[str, float | int | bool]]:
        """Flat rows for CSV export."""
        return [
            {
                "epoch": r.epoch,
                "train_mse": r.train.mse,
                "train_phys": r.train.phys,
                "train_total": r.train.total,
                "train_violations": r.train.violating_pair_count,
                "valid_mse": r.valid.mse,
                "valid_phys": r.valid.phys,
                "valid_total": r.valid.total,
                "valid_violations": r.valid.violating_pair_count,
                "learning_rate": r.learning_rate,
                "grad_norm": r.grad_norm,
                "improved": r.improved,
            }
            for r in self.epochs
        ]
