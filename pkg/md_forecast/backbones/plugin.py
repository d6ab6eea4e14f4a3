"""Backbone plugin system.

A plugin names one backbone kind and knows how to build its torch module
for a given ArchitectureSpec.
"""

from abc import ABC, abstractmethod

import torch
from torch import nn

from md_forecast.exceptions import ShapeMismatch
from md_forecast.models.training import ArchitectureSpec

_ACTIVATION_LAYERS: dict[str, type[nn.Module]] = {
    "gelu": nn.GELU,
    "relu": nn.ReLU,
    "silu": nn.SiLU,
    "tanh": nn.Tanh,
}


def make_activation(name: str) -> nn.Module:
    """Fresh activation layer for an ArchitectureSpec.activation name."""
    return _ACTIVATION_LAYERS[name]()


class Backbone(nn.Module):
    """Base module: maps (B, H, 6N) features to (B, L, 3N) displacements.

    Modules are float64. Weights start Xavier-uniform with zero biases,
    drawn from a generator seeded by `seed`.
    """

    def __init__(self, spec: ArchitectureSpec) -> None:
        super().__init__()
        self.spec = spec

    def check_input(self, x: torch.Tensor) -> None:
        """Raise ShapeMismatch unless x is (B, H, 6N)."""
        expected = (self.spec.H, self.spec.in_channels)
        if x.ndim != 3 or tuple(x.shape[1:]) != expected:
            raise ShapeMismatch(
                f"{self.spec.kind} backbone expects (B, {expected[0]}, {expected[1]}), "
                f"got {tuple(x.shape)}"
            )

    def reset_parameters(self, seed: int = 0) -> None:
        """Xavier-uniform weights, zero biases."""
        generator = torch.Generator().manual_seed(seed)
        for name, param in sorted(self.named_parameters()):
            if name.endswith("bias") or ".bias_" in name:
                nn.init.zeros_(param)
            elif param.ndim >= 2:
                nn.init.xavier_uniform_(param, generator=generator)
            else:
                nn.init.zeros_(param)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self.check_input(x)
        out = self.compute(x)
        return out.reshape(x.shape[0], self.spec.L, self.spec.out_channels)

    def compute(self, x: torch.Tensor) -> torch.Tensor:
        """Backbone-specific map; any output reshapeable to (B, L, 3N)."""
        raise NotImplementedError


class BackbonePlugin(ABC):
    """Base class for backbone plugins."""

    @abstractmethod
    def get_kind(self) -> str:
        """Registry key, e.g. "mlp"."""

    @abstractmethod
    def build(self, spec: ArchitectureSpec) -> Backbone:
        """Construct an uninitialized module for `spec`."""

    def get_description(self) -> str:
        """Backbone description for --help and logs."""
        return (self.__doc__ or f"{self.get_kind()} backbone").strip().splitlines()[0]
