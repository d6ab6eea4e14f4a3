"""Two-hidden-layer MLP backbone."""

import torch
from torch import nn

from md_forecast.backbones.plugin import Backbone, BackbonePlugin, make_activation
from md_forecast.models.training import ArchitectureSpec


class MLPBackbone(Backbone):
    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__(spec)
        self.net = nn.Sequential(
            nn.Linear(spec.H * spec.in_channels, spec.hidden),
            make_activation(spec.activation),
            nn.Linear(spec.hidden, spec.hidden),
            make_activation(spec.activation),
            nn.Linear(spec.hidden, spec.L * spec.out_channels),
        )

    def compute(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x.flatten(start_dim=1))


class MLPPlugin(BackbonePlugin):
    """Flattened history through two hidden layers."""

    def get_kind(self) -> str:
        return "mlp"

    def build(self, spec: ArchitectureSpec) -> Backbone:
        return MLPBackbone(spec)
