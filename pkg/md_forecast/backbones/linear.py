"""Linear backbone: one affine map from the flattened history to the horizon."""

import torch
from torch import nn

from md_forecast.backbones.plugin import Backbone, BackbonePlugin
from md_forecast.models.training import ArchitectureSpec


class LinearBackbone(Backbone):
    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__(spec)
        self.proj = nn.Linear(spec.H * spec.in_channels, spec.L * spec.out_channels)

    def compute(self, x: torch.Tensor) -> torch.Tensor:
        return self.proj(x.flatten(start_dim=1))


class LinearPlugin(BackbonePlugin):
    """Affine map from H x 6N features to L x 3N displacements."""

    def get_kind(self) -> str:
        return "linear"

    def build(self, spec: ArchitectureSpec) -> Backbone:
        return LinearBackbone(spec)
