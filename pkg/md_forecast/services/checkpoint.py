"""Model checkpoints.

A checkpoint is a torch-serialized dict of plain values and tensors:
format tag, architecture, parameters, normalizer statistics, window spec,
species order and the name of the threshold table the model was trained
against. Loading uses weights_only so no code is unpickled.
"""

import logging
from pathlib import Path
from typing import Any

import numpy as np
import torch

from md_forecast.backbones import BackboneRegistry, default_registry
from md_forecast.exceptions import CheckpointFormatError
from md_forecast.models.training import ArchitectureSpec, TrainConfig
from md_forecast.models.windows import Normalizer, WindowSpec
from md_forecast.services.forecaster import ForecastModel

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "md-forecast-checkpoint/1"

_REQUIRED = ("format", "architecture", "state_dict", "normalizer", "window", "species")


def save_checkpoint(
    model: ForecastModel,
    path: Path,
    train_config: TrainConfig | None = None,
) -> Path:
    """Write `model` to `path` (parent directories are created)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "architecture": model.spec.to_dict(),
        "state_dict": {k: v.detach().clone() for k, v in model.module.state_dict().items()},
        "normalizer": {
            "mean": torch.from_numpy(np.array(model.normalizer.mean, dtype=np.float64)),
            "std": torch.from_numpy(np.array(model.normalizer.std, dtype=np.float64)),
            "enabled": model.normalizer.enabled,
        },
        "window": {
            "H": model.window.H,
            "L": model.window.L,
            "stride": model.window.stride,
        },
        "species": list(model.species),
        "thresholds_ref": model.thresholds_ref,
        "train_config": _config_dict(train_config),
    }
    torch.save(payload, path)
    logger.info(
        "Saved %s checkpoint (%d params) to %s",
        model.spec.kind,
        model.n_parameters,
        path,
    )
    return path


def _config_dict(cfg: TrainConfig | None) -> dict[str, Any]:
    if cfg is None:
        return {}
    return {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}


def load_checkpoint(path: Path, registry: BackboneRegistry | None = None) -> ForecastModel:
    """Rebuild a ForecastModel from a checkpoint file.

    Raises:
        CheckpointFormatError: Unreadable file, unknown format tag or
            missing fields
        UnknownBackbone: If the architecture kind is not registered
    """
    path = Path(path)
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise CheckpointFormatError(f"Cannot read checkpoint {path}: {e}") from e

    if not isinstance(payload, dict):
        raise CheckpointFormatError(f"Checkpoint {path} is not a mapping")
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointFormatError(
            f"Checkpoint {path} has format {payload.get('format')!r}, "
            f"expected {CHECKPOINT_FORMAT!r}"
        )
    missing = [key for key in _REQUIRED if key not in payload]
    if missing:
        raise CheckpointFormatError(f"Checkpoint {path} is missing: {', '.join(missing)}")

    try:
        spec = ArchitectureSpec(**payload["architecture"])
        norm = payload["normalizer"]
        normalizer = Normalizer(
            mean=norm["mean"].numpy().copy(),
            std=norm["std"].numpy().copy(),
            enabled=bool(norm["enabled"]),
        )
        window = WindowSpec(**payload["window"])
    except (TypeError, KeyError, ValueError) as e:
        raise CheckpointFormatError(f"Checkpoint {path} has malformed fields: {e}") from e

    module = (registry or default_registry()).create(spec)
    try:
        module.load_state_dict(payload["state_dict"])
    except RuntimeError as e:
        raise CheckpointFormatError(
            f"Checkpoint {path} parameters do not match {spec.kind}: {e}"
        ) from e

    model = ForecastModel(
        spec,
        module,
        normalizer,
        window,
        species=tuple(payload["species"]),
        thresholds_ref=str(payload.get("thresholds_ref", "")),
    )
    logger.info("Loaded %s checkpoint from %s", spec.kind, path)
    return model
