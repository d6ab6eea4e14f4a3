"""Channel-mixing backbone.

Alternates residual mixing along time (across the H history rows) and
along channels, then projects H -> L in time and hidden -> 3N in channels.
"""

import torch
from torch import nn

from md_forecast.backbones.plugin import Backbone, BackbonePlugin, make_activation
from md_forecast.models.training import ArchitectureSpec


class MixerBlock(nn.Module):
    def __init__(self, steps: int, channels: int, activation: str = "gelu") -> None:
        super().__init__()
        self.time_mix = nn.Linear(steps, steps)
        self.channel_mix = nn.Sequential(
            nn.Linear(channels, channels),
            make_activation(activation),
            nn.Linear(channels, channels),
        )
        self.act = make_activation(activation)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        # h: (B, steps, channels)
        h = h + self.act(self.time_mix(h.transpose(1, 2))).transpose(1, 2)
        return h + self.channel_mix(h)


class MixerBackbone(Backbone):
    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__(spec)
        self.embed = nn.Linear(spec.in_channels, spec.hidden)
        self.blocks = nn.ModuleList(
            MixerBlock(spec.H, spec.hidden, spec.activation)
            for _ in range(spec.blocks)
        )
        self.horizon = nn.Linear(spec.H, spec.L)
        self.head = nn.Linear(spec.hidden, spec.out_channels)

    def compute(self, x: torch.Tensor) -> torch.Tensor:
        h = self.embed(x)
        for block in self.blocks:
            h = block(h)
        h = self.horizon(h.transpose(1, 2)).transpose(1, 2)
        return self.head(h)


class MixerPlugin(BackbonePlugin):
    """Time/channel mixing blocks with a temporal projection head."""

    def get_kind(self) -> str:
        return "mixer"

    def build(self, spec: ArchitectureSpec) -> Backbone:
        return MixerBackbone(spec)
