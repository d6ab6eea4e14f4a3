"""Backbone registry.

Maps backbone kinds to plugins and builds initialized float64 modules.
"""

import logging

import torch

from md_forecast.backbones.plugin import Backbone, BackbonePlugin
from md_forecast.exceptions import DuplicateBackbone, UnknownBackbone
from md_forecast.models.training import ArchitectureSpec

logger = logging.getLogger(__name__)


class BackboneRegistry:
    """Registry for backbone plugins."""

    def __init__(self) -> None:
        self.plugins: dict[str, BackbonePlugin] = {}

    def register(self, plugin: BackbonePlugin) -> None:
        """Register a plugin under its kind.

        Raises:
            DuplicateBackbone: If the kind is already taken
        """
        kind = plugin.get_kind()
        if kind in self.plugins:
            raise DuplicateBackbone(kind)
        self.plugins[kind] = plugin
        logger.debug("Registered backbone plugin: %s", kind)

    def kinds(self) -> list[str]:
        """Registered kinds, sorted."""
        return sorted(self.plugins)

    def get(self, kind: str) -> BackbonePlugin:
        """Plugin for a kind.

        Raises:
            UnknownBackbone: If nothing is registered under `kind`
        """
        try:
            return self.plugins[kind]
        except KeyError:
            raise UnknownBackbone(kind, self.kinds()) from None

    def create(self, spec: ArchitectureSpec, seed: int = 0) -> Backbone:
        """Build, cast to float64 and initialize the module for `spec`."""
        module = self.get(spec.kind).build(spec).to(torch.float64)
        module.reset_parameters(seed)
        n_params = sum(p.numel() for p in module.parameters())
        logger.debug(
            "Created %s backbone: H=%d L=%d N=%d params=%d seed=%d",
            spec.kind,
            spec.H,
            spec.L,
            spec.n_atoms,
            n_params,
            seed,
        )
        return module

    def describe(self) -> dict[str, str]:
        """kind -> one-line description."""
        return {kind: self.plugins[kind].get_description() for kind in self.kinds()}
