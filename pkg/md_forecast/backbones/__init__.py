"""Forecasting backbones."""

from md_forecast.backbones.linear import LinearBackbone, LinearPlugin
from md_forecast.backbones.lstm import LSTMBackbone, LSTMPlugin
from md_forecast.backbones.mixer import MixerBackbone, MixerPlugin
from md_forecast.backbones.mlp import MLPBackbone, MLPPlugin
from md_forecast.backbones.plugin import Backbone, BackbonePlugin
from md_forecast.backbones.registry import BackboneRegistry


def default_registry() -> BackboneRegistry:
    """Registry with the built-in backbones."""
    registry = BackboneRegistry()
    for plugin in (LinearPlugin(), MLPPlugin(), MixerPlugin(), LSTMPlugin()):
        registry.register(plugin)
    return registry


__all__ = [
    "Backbone",
    "BackbonePlugin",
    "BackboneRegistry",
    "LinearBackbone",
    "LinearPlugin",
    "LSTMBackbone",
    "LSTMPlugin",
    "MixerBackbone",
    "MixerPlugin",
    "MLPBackbone",
    "MLPPlugin",
    "default_registry",
]
