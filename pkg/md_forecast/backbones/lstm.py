"""Recurrent baseline: LSTM encoder over the history, linear horizon head."""

import torch
from torch import nn

from md_forecast.backbones.plugin import Backbone, BackbonePlugin
from md_forecast.models.training import ArchitectureSpec


class LSTMBackbone(Backbone):
    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__(spec)
        self.encoder = nn.LSTM(
            input_size=spec.in_channels,
            hidden_size=spec.hidden,
            num_layers=1,
            batch_first=True,
        )
        self.head = nn.Linear(spec.hidden, spec.L * spec.out_channels)

    def compute(self, x: torch.Tensor) -> torch.Tensor:
        _, (hidden, _) = self.encoder(x)
        return self.head(hidden[-1])


class LSTMPlugin(BackbonePlugin):
    """LSTM encoder over H feature rows with a linear head."""

    def get_kind(self) -> str:
        return "lstm"

    def build(self, spec: ArchitectureSpec) -> Backbone:
        return LSTMBackbone(spec)
