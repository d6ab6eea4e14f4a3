"""Forecast model, reverse-mode gradients and physics-informed training.

The objective is L = MSE + λ · phys. The MSE term is taken in normalized
target space; the physics term is evaluated on de-normalized (Å)
displacements because Morse energies need physical distances.
"""

import copy
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
from numpy.typing import NDArray
from torch.nn.utils import clip_grad_norm_, parameters_to_vector, vector_to_parameters

from md_forecast.backbones import Backbone, BackboneRegistry, default_registry
from md_forecast.exceptions import (
    EmptyDataset,
    EmptyInput,
    NonFiniteGradient,
    NonFiniteLoss,
    ShapeMismatch,
)
from md_forecast.models.morse import MorseTable, ThresholdTable
from md_forecast.models.training import (
    ArchitectureSpec,
    EpochRecord,
    LossBreakdown,
    TrainConfig,
    TrainingLog,
)
from md_forecast.models.windows import (
    FeatureWindow,
    Normalizer,
    TargetWindow,
    WindowSet,
    WindowSpec,
)
from md_forecast.services.morse import PairPotential
from md_forecast.services.physics import TorchPairPotential, physics_penalty
from md_forecast.utils.rng import derive_rng

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]


class ForecastModel:
    """A backbone plus everything needed to run it on raw features.

    Holds the architecture descriptor, the torch module (whose flattened
    parameters are θ), the feature normalizer and the window spec.
    """

    def __init__(
        self,
        spec: ArchitectureSpec,
        module: Backbone,
        normalizer: Normalizer | None = None,
        window: WindowSpec | None = None,
        species: tuple[str, ...] = (),
        thresholds_ref: str = "",
    ) -> None:
        self.spec = spec
        self.module = module
        self.normalizer = normalizer or Normalizer.identity(spec.n_atoms)
        self.window = window or WindowSpec(H=spec.H, L=spec.L)
        self.species = tuple(species)
        self.thresholds_ref = thresholds_ref
        if self.normalizer.n_atoms != spec.n_atoms:
            raise ShapeMismatch(
                f"Normalizer covers {self.normalizer.n_atoms} atoms, "
                f"architecture expects {spec.n_atoms}"
            )

    @classmethod
    def create(
        cls,
        spec: ArchitectureSpec,
        normalizer: Normalizer | None = None,
        window: WindowSpec | None = None,
        species: tuple[str, ...] = (),
        seed: int = 0,
        registry: BackboneRegistry | None = None,
    ) -> "ForecastModel":
        """Build and initialize a fresh model for `spec`."""
        module = (registry or default_registry()).create(spec, seed=seed)
        return cls(spec, module, normalizer, window, species)

    @property
    def H(self) -> int:
        return self.spec.H

    @property
    def L(self) -> int:
        return self.spec.L

    @property
    def n_atoms(self) -> int:
        return self.spec.n_atoms

    @property
    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.module.parameters())

    @property
    def theta(self) -> FloatArray:
        """Flat parameter vector θ (a copy)."""
        return parameters_to_vector(self.module.parameters()).detach().numpy().copy()

    def set_theta(self, theta: FloatArray) -> None:
        """Overwrite θ from a flat vector.

        Raises:
            ShapeMismatch: If the length differs from the parameter count
        """
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.n_parameters,):
            raise ShapeMismatch(
                f"theta has shape {theta.shape}, expected ({self.n_parameters},)"
            )
        with torch.no_grad():
            vector_to_parameters(torch.from_numpy(theta.copy()), self.module.parameters())

    def clone(self) -> "ForecastModel":
        return ForecastModel(
            self.spec,
            copy.deepcopy(self.module),
            self.normalizer,
            self.window,
            self.species,
            self.thresholds_ref,
        )

    def target_stats(self) -> tuple[torch.Tensor, torch.Tensor]:
        """(mean, std) of target columns as tensors (identity when disabled)."""
        if not self.normalizer.enabled:
            width = self.spec.out_channels
            return torch.zeros(width, dtype=torch.float64), torch.ones(width, dtype=torch.float64)
        return (
            torch.from_numpy(np.array(self.normalizer.target_mean)),
            torch.from_numpy(np.array(self.normalizer.target_std)),
        )

    def predict_batch(self, features: FloatArray) -> FloatArray:
        """(B, H, 6N) raw features to (B, L, 3N) displacements in Å."""
        x = torch.from_numpy(np.array(self.normalizer.apply(features), dtype=np.float64))
        mean, std = self.target_stats()
        self.module.eval()
        with torch.no_grad():
            out = self.module(x) * std + mean
        return out.numpy()

    def predict(self, features: FloatArray) -> FloatArray:
        """(H, 6N) raw features to (L, 3N) displacements in Å."""
        features = np.asarray(features, dtype=np.float64)
        return self.predict_batch(features[None])[0]


def forward(model: ForecastModel, x: FeatureWindow) -> TargetWindow:
    """Predicted displacement window for one feature window.

    Raises:
        ShapeMismatch: If x is not H x 6N
    """
    expected = (model.H, model.spec.in_channels)
    if x.values.shape != expected:
        raise ShapeMismatch(f"Feature window must be {expected}, got {x.values.shape}")
    return TargetWindow(model.predict(x.values))


@dataclass(frozen=True, eq=False)
class _Batch:
    x: torch.Tensor
    y: torch.Tensor
    base: torch.Tensor


def _make_batch(model: ForecastModel, windows: WindowSet, index: NDArray[np.int64]) -> _Batch:
    normalizer = model.normalizer
    return _Batch(
        x=torch.from_numpy(np.array(normalizer.apply(windows.features[index]))),
        y=torch.from_numpy(np.array(normalizer.apply_targets(windows.targets[index]))),
        base=torch.from_numpy(np.array(windows.base_positions[index], dtype=np.float64)),
    )


def _loss(
    model: ForecastModel,
    batch: _Batch,
    potential: TorchPairPotential,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[torch.Tensor, LossBreakdown]:
    pred = model.module(batch.x)
    mse = torch.mean((pred - batch.y) ** 2)
    mean, std = model.target_stats()
    penalty = physics_penalty(
        pred * std + mean,
        batch.base,
        potential,
        cfg.pairs_per_step,
        rng,
        chain=cfg.chain_physics,
        collect=False,
    )
    total = mse + cfg.lam * penalty.value
    breakdown = LossBreakdown(
        mse=float(mse),
        phys=float(penalty.value),
        lam=cfg.lam,
        violating_pair_count=penalty.count,
        pairs_checked=penalty.pairs_checked,
    )
    return total, breakdown


def _potential(
    windows: WindowSet, morse: MorseTable, thresholds: ThresholdTable
) -> TorchPairPotential:
    return TorchPairPotential.from_potential(
        PairPotential.build(windows.species, morse, thresholds)
    )


def evaluate_loss(
    model: ForecastModel,
    batch: WindowSet,
    morse: MorseTable,
    thresholds: ThresholdTable,
    cfg: TrainConfig,
) -> LossBreakdown:
    """Loss terms on a batch with the pair sample fixed by cfg.seed."""
    if len(batch) == 0:
        raise EmptyInput("Loss needs a non-empty batch")
    rng = derive_rng(cfg.seed, "gradient.pairs")
    data = _make_batch(model, batch, np.arange(len(batch)))
    model.module.train()
    with torch.no_grad():
        _, breakdown = _loss(model, data, _potential(batch, morse, thresholds), cfg, rng)
    return breakdown


def gradient(
    model: ForecastModel,
    batch: WindowSet,
    morse: MorseTable,
    thresholds: ThresholdTable,
    cfg: TrainConfig,
) -> FloatArray:
    """Reverse-mode gradient of the total loss with respect to θ.

    Pair sampling uses the same seeded stream as evaluate_loss, so the two
    agree and finite differences can be checked against this.

    Raises:
        EmptyInput: If the batch is empty
        NonFiniteGradient: If any component is NaN or infinite
    """
    if len(batch) == 0:
        raise EmptyInput("Gradient needs a non-empty batch")
    rng = derive_rng(cfg.seed, "gradient.pairs")
    data = _make_batch(model, batch, np.arange(len(batch)))
    model.module.train()
    model.module.zero_grad(set_to_none=False)
    total, _ = _loss(model, data, _potential(batch, morse, thresholds), cfg, rng)
    total.backward()
    grad = _flat_grad(model)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("Gradient contains non-finite entries")
    return grad


def _flat_grad(model: ForecastModel) -> FloatArray:
    parts = [
        (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1)
        for p in model.module.parameters()
    ]
    return torch.cat(parts).detach().numpy().copy()


def clip_gradients(module: torch.nn.Module, clip_norm: float) -> tuple[float, float]:
    """Clip the global gradient norm in place; returns (norm before, norm after)."""
    before = float(clip_grad_norm_(module.parameters(), clip_norm))
    grads = [p.grad.reshape(-1) for p in module.parameters() if p.grad is not None]
    after = float(torch.linalg.vector_norm(torch.cat(grads))) if grads else 0.0
    return before, after


def _evaluate_windows(
    model: ForecastModel,
    windows: WindowSet,
    potential: TorchPairPotential,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> LossBreakdown:
    parts: list[LossBreakdown] = []
    weights: list[int] = []
    model.module.eval()
    with torch.no_grad():
        for start in range(0, len(windows), cfg.batch_size):
            index = np.arange(start, min(start + cfg.batch_size, len(windows)))
            _, breakdown = _loss(model, _make_batch(model, windows, index), potential, cfg, rng)
            parts.append(breakdown)
            weights.append(len(index))
    return LossBreakdown.mean(parts, weights)


def train(
    model: ForecastModel,
    train_windows: WindowSet,
    valid_windows: WindowSet,
    morse: MorseTable,
    thresholds: ThresholdTable,
    cfg: TrainConfig,
) -> tuple[ForecastModel, TrainingLog]:
    """Minimize MSE + λ·phys with Adam and global-norm clipping.

    Training runs on a copy of `model`. It stops after max_epochs or after
    `patience` epochs without validation improvement, and returns the
    parameters of the best validation epoch.

    Raises:
        EmptyDataset: If either window set is empty
        NonFiniteLoss: Loss became NaN/inf (reports epoch and batch)
        NonFiniteGradient: Gradient became NaN/inf
    """
    if len(train_windows) == 0 or len(valid_windows) == 0:
        raise EmptyDataset(
            f"Training needs windows: train={len(train_windows)}, valid={len(valid_windows)}"
        )
    model = model.clone()
    train_potential = _potential(train_windows, morse, thresholds)
    valid_potential = _potential(valid_windows, morse, thresholds)
    shuffle_rng = derive_rng(cfg.seed, "train.shuffle")
    pair_rng = derive_rng(cfg.seed, "train.pairs")

    optimizer = torch.optim.Adam(
        model.module.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999), eps=1e-8
    )
    scheduler = None
    if cfg.lr_schedule == "plateau":
        scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
            optimizer, mode="min", factor=cfg.plateau_factor, patience=cfg.plateau_patience
        )

    log = TrainingLog()
    best_state = copy.deepcopy(model.module.state_dict())
    best_loss = math.inf
    stale = 0
    logger.info(
        "Training %s backbone (%d params): %d train / %d valid windows, "
        "lambda=%g, M=%d, B=%d, lr=%g, seed=%d",
        model.spec.kind,
        model.n_parameters,
        len(train_windows),
        len(valid_windows),
        cfg.lam,
        cfg.pairs_per_step,
        cfg.batch_size,
        cfg.learning_rate,
        cfg.seed,
    )

    for epoch in range(cfg.max_epochs):
        order = (
            shuffle_rng.permutation(len(train_windows))
            if cfg.shuffle
            else np.arange(len(train_windows))
        )
        parts: list[LossBreakdown] = []
        weights: list[int] = []
        max_grad_norm = 0.0
        model.module.train()
        for batch_number, start in enumerate(range(0, len(order), cfg.batch_size)):
            index = order[start : start + cfg.batch_size]
            batch = _make_batch(model, train_windows, index)
            optimizer.zero_grad(set_to_none=False)
            total, breakdown = _loss(model, batch, train_potential, cfg, pair_rng)
            value = float(total)
            if not math.isfinite(value):
                raise NonFiniteLoss(epoch=epoch, batch=batch_number, value=value)
            total.backward()
            for param in model.module.parameters():
                if param.grad is not None and not bool(torch.isfinite(param.grad).all()):
                    raise NonFiniteGradient(
                        f"Non-finite gradient at epoch {epoch}, batch {batch_number}"
                    )
            norm, _ = clip_gradients(model.module, cfg.clip_norm)
            max_grad_norm = max(max_grad_norm, norm)
            optimizer.step()
            parts.append(breakdown)
            weights.append(len(index))
            logger.debug(
                "epoch %d batch %d: total=%.6g mse=%.6g phys=%.6g violations=%d",
                epoch,
                batch_number,
                value,
                breakdown.mse,
                breakdown.phys,
                breakdown.violating_pair_count,
            )

        train_loss = LossBreakdown.mean(parts, weights)
        valid_loss = _evaluate_windows(
            model, valid_windows, valid_potential, cfg, derive_rng(cfg.seed, "valid.pairs")
        )
        if not math.isfinite(valid_loss.total):
            raise NonFiniteLoss(epoch=epoch, batch=-1, value=valid_loss.total)
        improved = valid_loss.total < best_loss
        if improved:
            best_loss = valid_loss.total
            best_state = copy.deepcopy(model.module.state_dict())
            log.best_epoch = epoch
            stale = 0
        else:
            stale += 1
        learning_rate = float(optimizer.param_groups[0]["lr"])
        log.epochs.append(
            EpochRecord(
                epoch=epoch,
                train=train_loss,
                valid=valid_loss,
                learning_rate=learning_rate,
                grad_norm=max_grad_norm,
                improved=improved,
            )
        )
        logger.info(
            "Epoch %d/%d: train=%.6g (mse=%.6g phys=%.6g) valid=%.6g "
            "violations=%d lr=%.3g%s",
            epoch + 1,
            cfg.max_epochs,
            train_loss.total,
            train_loss.mse,
            train_loss.phys,
            valid_loss.total,
            valid_loss.violating_pair_count,
            learning_rate,
            " *" if improved else "",
        )
        if scheduler is not None:
            scheduler.step(valid_loss.total)
        if stale >= cfg.patience:
            log.stopped_early = True
            logger.info("Early stopping after %d epochs without improvement", stale)
            break

    model.module.load_state_dict(best_state)
    logger.info(
        "Training completed: best epoch %d, valid loss %.6g",
        log.best_epoch + 1,
        log.best_valid_loss,
    )
    return model, log
